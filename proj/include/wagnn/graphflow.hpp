#pragma once

// Graph shift operators built from the channel, asynchronous activation, and
// the per-node delayed aggregation sequences that feed the Agg-GNN.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wagnn/linalg.hpp"

namespace wagnn::graphflow {

/// Thresholded, activation-masked channel used as graph shift operator.
/// h_tilde(i, j) = gain(i, j) when gain(i, j) >= eta0 and j is active, else 0.
struct GraphShift {
  Matrix h_tilde;
  double eta0 = 0.0;
};

GraphShift sparsify(const Matrix& gain, double eta0, const NodeMask& active);

/// H_tilde * signal.
Vector shift(const GraphShift& gs, std::span<const double> signal);

/// Row i holds node i's sequence [y_i^(0), ..., y_i^(K-1)].
struct AggregationState {
  std::size_t K = 1;
  Matrix y;
  Matrix prev_y;

  /// Cold start: every entry zero.
  static AggregationState cold(std::size_t m, std::size_t K);

  std::size_t nodes() const { return y.rows(); }
  std::span<const double> sequence(std::size_t node) const { return y.row(node); }
};

/// One time step of the exchange protocol. Every node records its own state
/// in slot 0 and forms slot k from the slot k-1 values its neighbors held at
/// the previous step: y_i^(k)(t) = sum_j h_tilde_ij(t) y_j^(k-1)(t-1).
/// Only `st.y` (the previous step) is read, so one exchange per step suffices.
AggregationState advance_aggregation(const AggregationState& st, const GraphShift& gs, std::span<const double> x_now);

/// Appends rows "t,node,k,value" for the current state.
void dump_csv(std::ostream& out, const AggregationState& st, std::uint64_t t, bool header = false);

enum class ActivationMode { synchronous, asynchronous };

/// Which nodes are awake at each step.
class ActivationSchedule {
 public:
  /// Every node active at every step.
  static ActivationSchedule synchronous(std::size_t m);

  /// Random subsets, one drawn uniformly per step. Each subset has
  /// clamp(Poisson(mean_active), 1, m) members chosen uniformly.
  static ActivationSchedule asynchronous(std::size_t m, std::size_t n_subsets, double mean_active,
                                         std::uint64_t seed);

  /// Explicit list of candidate subsets.
  static ActivationSchedule from_subsets(std::size_t m, std::vector<NodeMask> subsets, std::uint64_t seed);

  /// Active set at step t. The draw depends only on (seed, t).
  const NodeMask& sample(std::uint64_t t) const;

  ActivationMode mode() const { return mode_; }
  std::size_t nodes() const { return m_; }
  const std::vector<NodeMask>& subsets() const { return subsets_; }

 private:
  ActivationSchedule(ActivationMode mode, std::size_t m, std::vector<NodeMask> subsets, std::uint64_t seed);

  ActivationMode mode_;
  std::size_t m_;
  std::vector<NodeMask> subsets_;
  std::uint64_t seed_;
};

inline const NodeMask& sample_activation(const ActivationSchedule& sched, std::uint64_t t) { return sched.sample(t); }

std::size_t count_active(const NodeMask& mask);

}  // namespace wagnn::graphflow
