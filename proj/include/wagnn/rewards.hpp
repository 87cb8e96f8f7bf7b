#pragma once

// Environment feedback: per-node rewards, the network utility and the power
// budget slack.

#include <span>

#include "wagnn/linalg.hpp"

namespace wagnn::rewards {

enum class RewardKind { sumrate, demand };

struct RewardConfig {
  RewardKind kind = RewardKind::sumrate;
  double noise_floor = 1.0;
  double eta0 = 0.0;
  double P_max = 12.5;
  double p0 = 1.0;
  /// Count every transmitter as interference instead of the eta0 neighborhood.
  bool full_interference = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate(std::size_t m) const;
};

/// Neighborhood used for interference: mask(i, j) = 1 when gain(i, j) >= eta0.
/// With `full` every entry is 1.
Matrix interference_mask(const Matrix& gain, double eta0, bool full = false);

/// rate_i = log(1 + g_ii^2 p_i / (noise + sum_{j in N_i, j != i} g_ij^2 p_j)).
/// `neighbors(i, j)` nonzero marks j as an interferer of i.
Vector sumrate(std::span<const double> p, const Matrix& gain, const Matrix& neighbors, double noise_floor = 1.0);

/// sumrate minus the demand x_i.
Vector demand_reward(std::span<const double> p, const Matrix& gain, std::span<const double> x, const Matrix& neighbors,
                     double noise_floor = 1.0);

/// Reward vector for the configured kind.
Vector observe(const RewardConfig& cfg, std::span<const double> p, const Matrix& gain, std::span<const double> x);

/// u0(r) = sum_i r_i.
double utility_u0(std::span<const double> r);

/// P_max - sum_i p_i.
double power_slack(std::span<const double> p, double P_max);

}  // namespace wagnn::rewards
