#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pivotal/avoidance_metrics.hpp"
#include "pivotal/random.hpp"

namespace pivotal {

/// Name of the sampling scheme recorded in reports. Walks are drawn in fixed
/// blocks of kWalkBlock; block b of a run seeded with `seed` uses one
/// mt19937_64 seeded by splitmix64(seed + b * golden), walks in order.
inline constexpr std::string_view kRngName = "mt19937_64/splitmix64-per-block";

inline constexpr std::uint64_t kWalkBlock = 1024;

inline constexpr std::uint64_t kDefaultMaxSteps = 1'000'000;

enum class WalkOutcome { hit_target, hit_avoid, truncated };

struct WalkSample {
  std::vector<NodeIndex> states;  // X_0 .. X_kappa
  std::uint64_t steps = 0;        // kappa
  double cost = 0.0;              // eta
  WalkOutcome outcome = WalkOutcome::truncated;
};

/// States that end a walk. Reaching `targets` is a hit, reaching `avoid` a miss.
struct StopSet {
  std::vector<NodeIndex> targets;
  std::vector<NodeIndex> avoid;
};

namespace detail {

enum class StopKind : std::uint8_t { none, target, avoid };

// Per-state successor lists with cumulative probabilities, built once.
class Stepper {
 public:
  Stepper(const Chain& c, const StopSet& stop) : chain_(c), kind_(c.size(), StopKind::none) {
    const std::size_t n = c.size();
    for (NodeIndex t : stop.targets) {
      if (t >= n) throw ValidationError("stop state out of range");
      kind_[t] = StopKind::target;
    }
    for (NodeIndex o : stop.avoid) {
      if (o >= n) throw ValidationError("stop state out of range");
      if (kind_[o] == StopKind::target) throw ValidationError("state is both target and avoid");
      kind_[o] = StopKind::avoid;
    }
    next_.resize(n);
    cumulative_.resize(n);
    const Matrix& P = c.transition();
    for (NodeIndex i = 0; i < n; ++i) {
      double acc = 0.0;
      for (NodeIndex j : c.successors(i)) {
        acc += P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        next_[i].push_back(j);
        cumulative_[i].push_back(acc);
      }
    }
  }

  StopKind kind(NodeIndex i) const { return kind_[i]; }

  NodeIndex step(NodeIndex from, std::mt19937_64& rng) const {
    const auto& cum = cumulative_[from];
    const double u = unit_uniform(rng) * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t k = std::min<std::size_t>(it - cum.begin(), cum.size() - 1);
    return next_[from][k];
  }

  double cost(NodeIndex from, NodeIndex to) const {
    return chain_.cost()(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
  }

  // Runs one walk; `visit(state)` is called for X_0 .. X_{kappa-1} and
  // `x` ends at X_kappa.
  template <class Visit>
  WalkOutcome run(NodeIndex s, std::uint64_t max_steps, std::mt19937_64& rng,
                  std::uint64_t& steps, double& cost, NodeIndex& x, Visit&& visit) const {
    steps = 0;
    cost = 0.0;
    x = s;
    while (true) {
      switch (kind_[x]) {
        case StopKind::target: return WalkOutcome::hit_target;
        case StopKind::avoid: return WalkOutcome::hit_avoid;
        case StopKind::none: break;
      }
      if (steps >= max_steps) return WalkOutcome::truncated;
      visit(x);
      const NodeIndex y = step(x, rng);
      cost += this->cost(x, y);
      ++steps;
      x = y;
    }
  }

 private:
  const Chain& chain_;
  std::vector<StopKind> kind_;
  std::vector<std::vector<NodeIndex>> next_;
  std::vector<std::vector<double>> cumulative_;
};

}  // namespace detail

/// One walk from `s` until it enters a stop state or takes `max_steps` steps.
inline WalkSample sample_walk(const Chain& c, NodeIndex s, const StopSet& stop,
                              std::uint64_t max_steps, std::uint64_t seed) {
  if (s >= c.size()) throw ValidationError("walk start out of range");
  if (max_steps < 1) throw ValidationError("max_steps must be at least 1");
  if (stop.targets.empty() && stop.avoid.empty()) throw ValidationError("empty stop set");
  detail::Stepper stepper(c, stop);
  WalkSample out;
  NodeIndex last = s;
  std::mt19937_64 rng(detail::stream_seed(seed, 0));
  out.outcome = stepper.run(s, max_steps, rng, out.steps, out.cost, last,
                            [&](NodeIndex x) { out.states.push_back(x); });
  out.states.push_back(last);
  return out;
}

struct EstimateReport {
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double standard_error = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t accepted = 0;
  std::uint64_t total = 0;
  double acceptance_rate = 0.0;
};

struct SamplerOptions {
  std::uint64_t samples = 100'000;  // walks to draw (fixed-count mode)
  std::uint64_t seed = 0;
  std::uint64_t max_steps = kDefaultMaxSteps;
  /// When nonzero, draw blocks until this many walks are accepted or
  /// `max_samples` walks were drawn. `samples` is then ignored.
  std::uint64_t min_accepted = 0;
  std::uint64_t max_samples = 100'000'000;
  unsigned workers = 1;
};

/// Rejection-sampled estimates of every avoidance quantity for one query.
struct AvoidanceEstimates {
  EstimateReport hitting_time;
  EstimateReport hitting_cost;
  EstimateReport feasibility;
  std::vector<EstimateReport> visits;  // per state; NaN at target and avoid states
  std::uint64_t truncated = 0;
  std::string rng{kRngName};
  std::uint64_t seed = 0;
};

namespace detail {

struct BlockTotals {
  std::uint64_t walks = 0, accepted = 0, truncated = 0;
  double steps = 0, steps_sq = 0, cost = 0, cost_sq = 0;
  std::vector<double> visits, visits_sq;

  explicit BlockTotals(std::size_t n = 0) : visits(n, 0.0), visits_sq(n, 0.0) {}

  void merge(const BlockTotals& b) {
    walks += b.walks;
    accepted += b.accepted;
    truncated += b.truncated;
    steps += b.steps;
    steps_sq += b.steps_sq;
    cost += b.cost;
    cost_sq += b.cost_sq;
    for (std::size_t i = 0; i < visits.size(); ++i) {
      visits[i] += b.visits[i];
      visits_sq[i] += b.visits_sq[i];
    }
  }
};

inline BlockTotals run_block(const Stepper& stepper, NodeIndex s, std::uint64_t seed,
                             std::uint64_t block, std::uint64_t count, std::uint64_t max_steps,
                             std::size_t n) {
  BlockTotals b(n);
  std::mt19937_64 rng(stream_seed(seed, block));
  std::vector<std::uint64_t> counts(n, 0);
  std::vector<NodeIndex> touched;
  for (std::uint64_t w = 0; w < count; ++w) {
    std::uint64_t steps = 0;
    double cost = 0.0;
    NodeIndex last = s;
    touched.clear();
    const WalkOutcome outcome =
        stepper.run(s, max_steps, rng, steps, cost, last, [&](NodeIndex x) {
          if (counts[x]++ == 0) touched.push_back(x);
        });
    ++b.walks;
    if (outcome == WalkOutcome::truncated) ++b.truncated;
    if (outcome == WalkOutcome::hit_target) {
      ++b.accepted;
      const auto k = static_cast<double>(steps);
      b.steps += k;
      b.steps_sq += k * k;
      b.cost += cost;
      b.cost_sq += cost * cost;
      for (NodeIndex x : touched) {
        const auto v = static_cast<double>(counts[x]);
        b.visits[x] += v;
        b.visits_sq[x] += v * v;
      }
    }
    for (NodeIndex x : touched) counts[x] = 0;
  }
  return b;
}

inline EstimateReport mean_report(double sum, double sum_sq, std::uint64_t accepted,
                                  std::uint64_t total) {
  EstimateReport r;
  r.accepted = accepted;
  r.total = total;
  r.acceptance_rate = total ? static_cast<double>(accepted) / static_cast<double>(total) : 0.0;
  if (accepted == 0) return r;
  const auto m = static_cast<double>(accepted);
  r.estimate = sum / m;
  if (accepted > 1) {
    const double var = std::max(0.0, (sum_sq - sum * sum / m) / (m - 1.0));
    r.standard_error = std::sqrt(var / m);
  } else {
    r.standard_error = kInfinity;
  }
  return r;
}

}  // namespace detail

/// Draws walks from q.source until absorption by {target} u avoid; walks
/// ending at the target are accepted. Walks are processed in fixed blocks
/// of kWalkBlock merged in block order, so results do not depend on
/// `workers`.
inline AvoidanceEstimates sample_avoidance(const Chain& c, const AvoidanceQuery& q,
                                           const SamplerOptions& options) {
  q.validate(c.size());
  if (options.max_steps < 1) throw ValidationError("max_steps must be at least 1");
  const bool adaptive = options.min_accepted > 0;
  const std::uint64_t budget = adaptive ? options.max_samples : options.samples;
  if (budget < 1) throw ValidationError("sample count must be at least 1");

  const std::size_t n = c.size();
  const detail::Stepper stepper(c, StopSet{{q.target}, q.avoid});
  const unsigned workers = std::max(1u, options.workers);
  const std::uint64_t block_count = (budget + kWalkBlock - 1) / kWalkBlock;

  detail::BlockTotals totals(n);
  std::uint64_t next_block = 0;
  while (next_block < block_count) {
    const std::uint64_t batch = std::min<std::uint64_t>(workers, block_count - next_block);
    std::vector<detail::BlockTotals> results(batch);
    auto work = [&](std::uint64_t i) {
      const std::uint64_t b = next_block + i;
      const std::uint64_t first = b * kWalkBlock;
      const std::uint64_t count = std::min(kWalkBlock, budget - first);
      results[i] = detail::run_block(stepper, q.source, options.seed, b, count,
                                     options.max_steps, n);
    };
    if (batch == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::uint64_t i = 0; i < batch; ++i) pool.emplace_back(work, i);
      for (auto& t : pool) t.join();
    }
    bool done = false;
    for (const auto& r : results) {
      totals.merge(r);
      ++next_block;
      if (adaptive && totals.accepted >= options.min_accepted) {
        done = true;
        break;
      }
    }
    if (done) break;
  }

  AvoidanceEstimates out;
  out.seed = options.seed;
  out.truncated = totals.truncated;
  out.hitting_time =
      detail::mean_report(totals.steps, totals.steps_sq, totals.accepted, totals.walks);
  out.hitting_cost = detail::mean_report(totals.cost, totals.cost_sq, totals.accepted, totals.walks);
  if (totals.accepted == 0) {
    out.hitting_time.estimate = kInfinity;
    out.hitting_cost.estimate = kInfinity;
  }

  // feasibility: Bernoulli mean over all walks
  const auto acc = static_cast<double>(totals.accepted);
  out.feasibility = detail::mean_report(acc, acc, totals.walks, totals.walks);
  out.feasibility.accepted = totals.accepted;
  out.feasibility.acceptance_rate = out.hitting_time.acceptance_rate;
  if (totals.walks == 1) out.feasibility.standard_error = 0.0;

  std::vector<bool> stop(n, false);
  stop[q.target] = true;
  for (NodeIndex o : q.avoid) stop[o] = true;
  out.visits.resize(n);
  for (NodeIndex m = 0; m < n; ++m) {
    if (stop[m]) {
      out.visits[m].total = totals.walks;
      out.visits[m].accepted = totals.accepted;
      out.visits[m].acceptance_rate = out.hitting_time.acceptance_rate;
      continue;
    }
    out.visits[m] =
        detail::mean_report(totals.visits[m], totals.visits_sq[m], totals.accepted, totals.walks);
  }
  return out;
}

enum class Quantity { hitting_time, hitting_cost, visits, feasibility };

/// Single-quantity view of sample_avoidance with `n_samples` walks.
/// `visit_state` selects m for Quantity::visits.
inline EstimateReport estimate_avoidance(const Chain& c, const AvoidanceQuery& q, Quantity quantity,
                                         std::uint64_t n_samples, std::uint64_t seed,
                                         NodeIndex visit_state = 0) {
  if (quantity == Quantity::visits && visit_state >= c.size())
    throw ValidationError("visit state out of range");
  SamplerOptions options;
  options.samples = n_samples;
  options.seed = seed;
  const AvoidanceEstimates e = sample_avoidance(c, q, options);
  switch (quantity) {
    case Quantity::hitting_time: return e.hitting_time;
    case Quantity::hitting_cost: return e.hitting_cost;
    case Quantity::visits: return e.visits[visit_state];
    case Quantity::feasibility: return e.feasibility;
  }
  return {};
}

}  // namespace pivotal
