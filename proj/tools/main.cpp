#include <iostream>

#include "pivotal_cli.hpp"

int main(int argc, char** argv) { return pivotal::cli::run_cli(argc, argv, std::cout, std::cerr); }
