#pragma once

// Randomized binary power policy on top of the Agg-GNN readout and its
// score-function gradients.

#include <cstdint>
#include <span>
#include <vector>

#include "wagnn/aggnn.hpp"
#include "wagnn/linalg.hpp"

namespace wagnn::policy {

/// Readouts are clamped to [-kZClamp, kZClamp] before the sigmoid.
inline constexpr double kZClamp = 30.0;

double sigmoid(double z);

struct PolicySample {
  Vector probs;    // pi_i = sigmoid(z_i)
  Vector actions;  // p_i in {0, p0}
  double p0 = 1.0;
  Vector score;  // d log psi_i / d z_i
};

/// Independent Bernoulli draws; node i uses the substream (seed, t, i).
PolicySample sample(std::span<const double> z, double p0, std::uint64_t seed, std::uint64_t t);

/// Bernoulli score for a given action: (1 - pi) when transmitting, -pi otherwise.
double bernoulli_score(double prob, bool transmit);

/// Evaluation-mode actions: p0 where pi_i >= 0.5.
Vector threshold_actions(std::span<const double> z, double p0);

struct LogProbGradient {
  aggnn::FilterTensor total;                  // sum_i score_i dz_i/dA
  std::vector<aggnn::FilterTensor> per_node;  // score_i dz_i/dA
};

/// Chains the per-node readout gradients dz_i/dA with the Bernoulli scores.
LogProbGradient log_prob_grad_chain(const PolicySample& sample, std::span<const aggnn::FilterTensor> dz_dA);

}  // namespace wagnn::policy
