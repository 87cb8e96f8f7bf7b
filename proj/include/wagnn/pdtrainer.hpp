#pragma once

// Model-free primal-dual training of the shared filter tensor.
//
// Primal variables: filter tensor A and reward estimates r. Dual variables:
// lambda (one per node, for r <= E[f]) and mu_p (expected power budget).
// The A-gradient is a score-function estimate, so the reward function is
// only ever observed, never differentiated.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "wagnn/aggnn.hpp"
#include "wagnn/graphflow.hpp"
#include "wagnn/linalg.hpp"
#include "wagnn/netgen.hpp"
#include "wagnn/rewards.hpp"

namespace wagnn::pdtrainer {

struct StepSizes {
  double A = 2e-3;
  double r = 1e-2;
  double dual = 1e-3;
};

enum class Estimator {
  /// (lambda^T f + mu_p slack - b) * sum_i score_i dz_i/dA
  global_signal,
  /// sum_i (lambda_i f_i + mu_p (P_max/m - p_i) - b_i) score_i dz_i/dA
  per_node,
};

struct TrainerConfig {
  StepSizes eps;
  Estimator estimator = Estimator::per_node;
  bool use_baseline = true;
  double baseline_decay = 0.99;
  double momentum = 0.0;
  /// Rescale g_hat to this norm when larger; 0 disables clipping.
  double grad_clip = 1.0;
  std::size_t iterations = 40000;
  double divergence_bound = 1e6;
  /// Root seed of the policy sampling substream.
  std::uint64_t seed = 0;
  std::size_t ma_window = 500;
  std::size_t checkpoint_every = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainerState {
  aggnn::FilterTensor A;
  std::vector<aggnn::FilterTensor> A_local;
  Vector r;
  Vector lambda;
  double mu_p = 0.0;
  StepSizes eps;
  std::uint64_t tau = 0;

  // variance reduction / optimizer bookkeeping
  Vector signal_baseline;
  bool baseline_ready = false;
  aggnn::FilterTensor velocity;

  /// r = 0, lambda = 1, mu_p = 0, every local copy equal to A.
  static TrainerState initial(aggnn::FilterTensor A, std::size_t m, StepSizes eps = {});

  std::size_t nodes() const { return r.size(); }
};

/// u0(r) + lambda^T (f_obs - r) + mu_p slack_obs.
double lagrangian(const TrainerState& state, std::span<const double> f_obs, double slack_obs);

/// r <- r + eps_r (1 - lambda).
void primal_step_r(TrainerState& state);

/// Scalar/per-node reward signals the A-step weights the score terms with.
/// Global estimator: one entry (lambda^T f + mu_p slack). Per-node: m entries.
Vector estimator_signal(const TrainerState& state, const TrainerConfig& cfg, std::span<const double> f_obs,
                        std::span<const double> p_obs, double P_max);

/// Gradient estimate before the baseline is subtracted and before stepping;
/// `per_node_score_grads[i]` is score_i * dz_i/dA. `signal_offset` is
/// subtracted from the signal (the running baseline during training).
aggnn::FilterTensor estimate_gradient(const TrainerState& state, const TrainerConfig& cfg,
                                      std::span<const aggnn::FilterTensor> per_node_score_grads,
                                      std::span<const double> f_obs, std::span<const double> p_obs, double P_max,
                                      std::span<const double> signal_offset = {});

/// A <- A + eps_A * g_hat; returns |g_hat|.
double primal_step_A(TrainerState& state, const TrainerConfig& cfg,
                     std::span<const aggnn::FilterTensor> per_node_score_grads, std::span<const double> f_obs,
                     std::span<const double> p_obs, double P_max);

/// lambda <- [lambda - eps (f_obs - r)]^+, mu_p <- [mu_p - eps slack_obs]^+.
void dual_step(TrainerState& state, std::span<const double> f_obs, double slack_obs);

/// A_local[i] <- A for every active i.
void sync_local_copies(TrainerState& state, const NodeMask& active);

/// Everything a training or evaluation run samples from.
struct Environment {
  netgen::ChannelProcess channel;
  netgen::NodeStateProcess node_state;
  graphflow::ActivationSchedule schedule;
  rewards::RewardConfig reward;
  std::size_t K = 5;

  std::size_t nodes() const { return channel.size(); }
};

/// What one training iteration saw and did; handed to the observer so other
/// methods can be scored on identical realizations.
struct IterationView {
  std::uint64_t tau;
  const Matrix& gain;
  const NodeMask& active;
  const Vector& x;
  const Vector& actions;
  const Vector& rates;
};

struct LogRow {
  std::uint64_t tau = 0;
  double u0_r = 0;
  double sumrate_obs = 0;
  double power_obs = 0;
  double constraint_violation = 0;
  double lambda_mean = 0;
  double mu_p = 0;
  double grad_norm = 0;
  double sumrate_ma = 0;
  double power_ma = 0;
  double sumrate_det = 0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const LogRow& row);

struct TrainResult {
  aggnn::FilterTensor A;
  TrainerState state;
  std::vector<LogRow> log;
};

using Observer = std::function<void(const IterationView&)>;
/// Called with (iterations done, central A) every cfg.checkpoint_every iterations.
using Checkpointer = std::function<void(std::uint64_t, const aggnn::FilterTensor&)>;

/// Runs cfg.iterations primal-dual iterations. Each iteration: sync local
/// copies for the active set, advance the aggregation sequences, evaluate every
/// node with its local copy, sample actions, observe rewards and slack, update
/// r and A, then the duals, then advance the channel and node state.
TrainResult train(const TrainerConfig& cfg, Environment& env, aggnn::FilterTensor initial, const Observer& observer = {},
                  const Checkpointer& checkpoint = {});

}  // namespace wagnn::pdtrainer
