#pragma once

// Model-based (WMMSE) and naive power allocation baselines.

#include <cstdint>
#include <vector>

#include "wagnn/linalg.hpp"

namespace wagnn::baselines {

struct WmmseState {
  Vector v;  // amplitudes, v_i^2 is the power
  Vector u;  // receive scalars
  Vector w;  // MSE weights
  double p_cap = 1.0;
};

struct WmmseResult {
  Vector powers;
  /// Set when some amplitude update hit 0/0 (e.g. all gains zero); the
  /// affected nodes are switched off.
  bool degenerate = false;
};

/// Weighted-MMSE block coordinate iterations on amplitude gains g_ij
/// (interference at receiver i from transmitter j), starting from full power.
WmmseResult wmmse(const Matrix& gain, double p_cap, std::size_t iters, double noise = 1.0);

/// Power vectors after 0, 1, ..., iters iterations.
std::vector<Vector> wmmse_iterates(const Matrix& gain, double p_cap, std::size_t iters, double noise = 1.0,
                                   bool* degenerate = nullptr);

/// Entries below eta0 set to zero, the view of the channel WMMSE works with.
Matrix threshold_gain(const Matrix& gain, double eta0);

/// P_max / m on every transmitter.
Vector equal_power(std::size_t m, double P_max);

/// Full power p0 with probability P_max / (p0 m), independently per node;
/// node i uses substream (seed, t, i).
Vector random_power(std::size_t m, double P_max, double p0, std::uint64_t seed, std::uint64_t t);

}  // namespace wagnn::baselines
