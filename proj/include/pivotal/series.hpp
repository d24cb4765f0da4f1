#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pivotal/avoidance_metrics.hpp"

namespace pivotal {

inline constexpr double kSeriesEnvelopeThreshold = 1e-8;

/// Truncated power-series evaluation of an avoidance query, built only from
/// products with P_TT. With a_k = [P_TT^{k-1} P_TA]_{s,t}:
///   feasibility  = sum_{k<=K} a_k
///   hitting time = sum_{k<=K} k a_k / sum_{k<=K} a_k
///   visits(m)    = sum_{k<K} [P_TT^k]_{sm} Q_m / Q_s, Q from the same series.
struct SeriesResult {
  std::uint64_t terms = 0;  // K
  double numerator = 0.0;
  double denominator = 0.0;
  double hitting_time = kInfinity;
  double feasibility = 0.0;
  std::vector<double> visits;  // per state; NaN outside the transient set

  /// Max row sum of P_TT^K. Every bound below is a geometric tail over
  /// blocks of K steps, so it is only informative when envelope < 1.
  double envelope = 1.0;
  double feasibility_tail = kInfinity;
  double hitting_time_tail = kInfinity;
  std::vector<double> visits_tail;
  bool converged = false;
};

inline SeriesResult series_metrics(const Chain& c, const AvoidanceQuery& q, std::uint64_t K,
                                   double envelope_threshold = kSeriesEnvelopeThreshold) {
  q.validate(c.size());
  if (K < 1) throw ValidationError("series truncation must be at least 1");
  const std::vector<NodeIndex> absorbing = q.absorbing();
  const ChainPartition p = partition(c, absorbing);
  const Matrix& ptt = p.transient_block();
  const Vector b = p.absorbing_block().col(p.require_absorbing(q.target));
  const Eigen::Index s = p.require_transient(q.source);
  const auto nt = ptt.rows();

  SeriesResult out;
  out.terms = K;

  // forward: v = e_s P_TT^{k-1}; backward: w = P_TT^{k-1} b; ones for the envelope
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(nt);
  v(s) = 1.0;
  Vector w = b;
  Vector ones = Vector::Ones(nt);
  Eigen::RowVectorXd visit_sum = Eigen::RowVectorXd::Zero(nt);
  Vector feas_sum = Vector::Zero(nt);
  for (std::uint64_t k = 1; k <= K; ++k) {
    const double a = v.dot(b);
    out.numerator += static_cast<double>(k) * a;
    out.denominator += a;
    visit_sum += v;
    feas_sum += w;
    v = v * ptt;
    w = ptt * w;
    ones = ptt * ones;
  }
  out.envelope = ones.size() ? ones.maxCoeff() : 0.0;
  out.feasibility = out.denominator;

  const double rho = out.envelope;
  const auto kd = static_cast<double>(K);
  double tail_num = kInfinity, tail_den = kInfinity, tail_visits = kInfinity;
  if (rho < 1.0) {
    tail_den = rho;
    tail_num = kd * rho * (2.0 - rho) / (1.0 - rho);
    tail_visits = kd * rho / (1.0 - rho);
  }
  out.feasibility_tail = tail_den;
  out.converged = rho < envelope_threshold;

  const double q_s = feas_sum(s);
  out.visits.assign(c.size(), std::numeric_limits<double>::quiet_NaN());
  out.visits_tail.assign(c.size(), std::numeric_limits<double>::quiet_NaN());
  if (!is_feasible(out.denominator)) {
    out.hitting_time = kInfinity;
    for (NodeIndex m : p.transient()) {
      out.visits[m] = kInfinity;
      out.visits_tail[m] = kInfinity;
    }
    return out;
  }
  out.hitting_time = out.numerator / out.denominator;
  out.hitting_time_tail = (tail_num + out.hitting_time * tail_den) / out.denominator;
  for (Eigen::Index m = 0; m < nt; ++m) {
    const NodeIndex state = p.transient()[static_cast<std::size_t>(m)];
    out.visits[state] = visit_sum(m) * feas_sum(m) / q_s;
    out.visits_tail[state] =
        (tail_visits * (1.0 + tail_den) + (visit_sum(m) + out.visits[state]) * tail_den) / q_s;
  }
  return out;
}

}  // namespace pivotal
