// Ranks the nodes of the 5-node directed example by every pivotality metric
// for the walk from node 1 to node 4 and prints the table.
#include <iostream>

#include "pivotal/pivotal.hpp"

int main() {
  using namespace pivotal;
  const Graph g = example1();
  const PivotalityReport report = rank(g, g.index_of("1"), g.index_of("4"));
  write_csv(std::cout, report, g);
}
