#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include <Eigen/LU>

#include "pivotal/chain.hpp"

namespace pivotal {

/// Solves whose condition estimate exceeds this are flagged in reports.
inline constexpr double kConditionWarning = 1e12;

/// F = (I - P_TT)^-1: expected visit counts to each transient state before
/// absorption, for the partition it was computed on.
class FundamentalMatrix {
 public:
  FundamentalMatrix(ChainPartition p, Matrix values, double condition_estimate)
      : partition_(std::move(p)), values_(std::move(values)), condition_(condition_estimate) {}

  const ChainPartition& partition() const noexcept { return partition_; }
  const Matrix& values() const noexcept { return values_; }

  /// Entry by state index; both states must be transient.
  double at(NodeIndex from, NodeIndex to) const {
    return values_(partition_.require_transient(from), partition_.require_transient(to));
  }

  /// 1-norm condition estimate of I - P_TT.
  double condition_estimate() const noexcept { return condition_; }
  bool ill_conditioned() const noexcept { return !(condition_ <= kConditionWarning); }

  /// max |F (I - P_TT) - I|.
  double residual() const {
    const auto n = values_.rows();
    Matrix a = Matrix::Identity(n, n) - partition_.transient_block();
    return (values_ * a - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  }

 private:
  ChainPartition partition_;
  Matrix values_;
  double condition_;
};

/// Q = F P_TA: first-hit probabilities per absorbing state.
struct AbsorptionMatrix {
  ChainPartition partition;
  Matrix values;

  /// Q for (transient state `from`, absorbing state `to`).
  double at(NodeIndex from, NodeIndex to) const {
    return values(partition.require_transient(from), partition.require_absorbing(to));
  }
};

/// Pivoted LU solve of (I - P_TT) F = I.
inline FundamentalMatrix fundamental_matrix(const ChainPartition& p) {
  const auto n = static_cast<Eigen::Index>(p.transient_count());
  Matrix a = Matrix::Identity(n, n) - p.transient_block();
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  const double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(rcond > std::numeric_limits<double>::epsilon()))
    throw NumericalError("I - P_TT is numerically singular (condition estimate " +
                             std::to_string(condition) + ")",
                         condition);
  Matrix f = lu.solve(Matrix::Identity(n, n));
  return FundamentalMatrix(p, std::move(f), condition);
}

inline FundamentalMatrix fundamental_matrix(const Chain& c, std::span<const NodeIndex> absorbing) {
  return fundamental_matrix(partition(c, absorbing));
}

namespace detail {

// sum_m f(row, m) * weights(m), fixed left-to-right order
inline double weighted_row_sum(const Matrix& f, Eigen::Index row, const Vector& weights) {
  double sum = 0.0;
  for (Eigen::Index m = 0; m < f.cols(); ++m) sum += f(row, m) * weights(m);
  return sum;
}

}  // namespace detail

/// Expected one-step costs r_m of chain `c` for every transient state of `p`.
inline Vector expected_step_costs(const ChainPartition& p, const Chain& c) {
  Vector r(static_cast<Eigen::Index>(p.transient_count()));
  for (std::size_t k = 0; k < p.transient_count(); ++k)
    r(static_cast<Eigen::Index>(k)) = c.expected_step_cost(p.transient()[k]);
  return r;
}

/// H_s = sum_m F_sm over the transient states (ordered as the partition).
inline Vector hitting_time(const FundamentalMatrix& f) {
  const Matrix& v = f.values();
  Vector ones = Vector::Ones(v.cols());
  Vector h(v.rows());
  for (Eigen::Index s = 0; s < v.rows(); ++s) h(s) = detail::weighted_row_sum(v, s, ones);
  return h;
}

/// U_s = sum_m F_sm r_m. Uses the same summation as hitting_time, so unit
/// costs reproduce H bit for bit.
inline Vector hitting_cost(const FundamentalMatrix& f, const Chain& c) {
  if (c.size() != f.partition().chain().size())
    throw ValidationError("chain does not match the fundamental matrix");
  const Vector r = expected_step_costs(f.partition(), c);
  const Matrix& v = f.values();
  Vector u(v.rows());
  for (Eigen::Index s = 0; s < v.rows(); ++s) u(s) = detail::weighted_row_sum(v, s, r);
  return u;
}

inline AbsorptionMatrix absorption_probabilities(const FundamentalMatrix& f) {
  return {f.partition(), f.values() * f.partition().absorbing_block()};
}

inline AbsorptionMatrix absorption_probabilities(const FundamentalMatrix& f,
                                                 const ChainPartition& p) {
  if (p.transient() != f.partition().transient() || p.absorbing() != f.partition().absorbing())
    throw ValidationError("partition does not match the fundamental matrix");
  return {p, f.values() * p.absorbing_block()};
}

/// Expands a vector over the transient states to all states, with 0 at
/// absorbing states (the H_t^t = 0 convention).
inline std::vector<double> over_all_states(const ChainPartition& p, const Vector& transient_values) {
  std::vector<double> out(p.chain().size(), 0.0);
  for (std::size_t k = 0; k < p.transient_count(); ++k)
    out[p.transient()[k]] = transient_values(static_cast<Eigen::Index>(k));
  return out;
}

/// F for the absorbing set O1 u O2 from F for O1 by the block update
///   F'_im = F_im - F_i,O2 (F_O2,O2)^-1 F_O2,m.
/// `extra` must be transient in f. Empty `extra` returns f unchanged.
inline FundamentalMatrix incremental_fundamental(const FundamentalMatrix& f,
                                                 std::span<const NodeIndex> extra) {
  if (extra.empty()) return f;
  const ChainPartition& old = f.partition();

  std::vector<NodeIndex> absorbing = old.absorbing();
  std::vector<Eigen::Index> cut;
  for (NodeIndex o : extra) {
    Eigen::Index pos = old.require_transient(o);
    if (std::find(cut.begin(), cut.end(), pos) != cut.end()) continue;
    cut.push_back(pos);
    absorbing.push_back(o);
  }
  ChainPartition next = partition(old.chain(), absorbing);

  const Matrix& v = f.values();
  const auto k = static_cast<Eigen::Index>(cut.size());
  Matrix block(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) block(a, b) = v(cut[a], cut[b]);
  Eigen::PartialPivLU<Matrix> lu(block);
  if (!(lu.rcond() > std::numeric_limits<double>::epsilon()))
    throw NumericalError("F_O2,O2 block is singular", lu.rcond() > 0 ? 1.0 / lu.rcond() : HUGE_VAL);

  // kept[i] = old transient position of the i-th new transient state
  const auto nt = static_cast<Eigen::Index>(next.transient_count());
  std::vector<Eigen::Index> kept(static_cast<std::size_t>(nt));
  for (Eigen::Index i = 0; i < nt; ++i)
    kept[static_cast<std::size_t>(i)] = *old.transient_position(next.transient()[static_cast<std::size_t>(i)]);

  Matrix left(nt, k), right(k, nt), base(nt, nt);
  for (Eigen::Index i = 0; i < nt; ++i) {
    const auto oi = kept[static_cast<std::size_t>(i)];
    for (Eigen::Index a = 0; a < k; ++a) {
      left(i, a) = v(oi, cut[a]);
      right(a, i) = v(cut[a], oi);
    }
    for (Eigen::Index m = 0; m < nt; ++m) base(i, m) = v(oi, kept[static_cast<std::size_t>(m)]);
  }
  Matrix updated = base - left * lu.solve(right);
  return FundamentalMatrix(std::move(next), std::move(updated), f.condition_estimate());
}

/// Q_i^{j, not O} = F_ij / F_jj for every transient i of f (absorbing set O):
/// the probability of reaching j before O. Indexed like f's transient states.
inline Vector absorption_from_fundamental(const FundamentalMatrix& f, NodeIndex j) {
  const Eigen::Index col = f.partition().require_transient(j);
  return f.values().col(col) / f.values()(col, col);
}

/// Memoizes fundamental matrices per absorbing set. Not thread-safe; use one
/// cache per thread.
class FundamentalCache {
 public:
  explicit FundamentalCache(Chain c) : chain_(std::move(c)) {}

  const Chain& chain() const noexcept { return chain_; }

  const FundamentalMatrix& get(std::vector<NodeIndex> absorbing) {
    std::sort(absorbing.begin(), absorbing.end());
    absorbing.erase(std::unique(absorbing.begin(), absorbing.end()), absorbing.end());
    auto it = cache_.find(absorbing);
    if (it == cache_.end())
      it = cache_.emplace(absorbing, fundamental_matrix(partition(chain_, absorbing))).first;
    return it->second;
  }

  std::size_t size() const noexcept { return cache_.size(); }

  /// Largest condition estimate over every solve done so far.
  double max_condition_estimate() const noexcept {
    double m = 1.0;
    for (const auto& [key, f] : cache_) m = std::max(m, f.condition_estimate());
    return m;
  }

 private:
  Chain chain_;
  std::map<std::vector<NodeIndex>, FundamentalMatrix> cache_;
};

}  // namespace pivotal
