#pragma once

#include "pivotal/error.hpp"
#include "pivotal/graph.hpp"
#include "pivotal/graph_io.hpp"
#include "pivotal/chain.hpp"
#include "pivotal/classical_metrics.hpp"
#include "pivotal/avoidance_metrics.hpp"
#include "pivotal/identities.hpp"
#include "pivotal/shortest_path.hpp"
#include "pivotal/max_flow.hpp"
#include "pivotal/pivotality.hpp"
#include "pivotal/monte_carlo.hpp"
#include "pivotal/series.hpp"
#include "pivotal/netgen.hpp"
#include "pivotal/report_io.hpp"
