#include "wagnn/pdtrainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>
#include <sstream>

#include "wagnn/policy.hpp"

namespace wagnn::pdtrainer {

TrainerState TrainerState::initial(aggnn::FilterTensor A, std::size_t m, StepSizes eps) {
  TrainerState st;
  st.A_local.assign(m, A);
  st.velocity = A.zeros_like();
  st.A = std::move(A);
  st.r.assign(m, 0.0);
  st.lambda.assign(m, 1.0);
  st.mu_p = 0.0;
  st.eps = eps;
  return st;
}

double lagrangian(const TrainerState& state, std::span<const double> f_obs, double slack_obs) {
  if (f_obs.size() != state.nodes()) throw ShapeError("lagrangian: reward size mismatch");
  double value = rewards::utility_u0(state.r);
  for (std::size_t i = 0; i < f_obs.size(); ++i) value += state.lambda[i] * (f_obs[i] - state.r[i]);
  return value + state.mu_p * slack_obs;
}

void primal_step_r(TrainerState& state) {
  // grad_r u0 = 1 for the sum utility
  for (std::size_t i = 0; i < state.nodes(); ++i) state.r[i] += state.eps.r * (1.0 - state.lambda[i]);
}

Vector estimator_signal(const TrainerState& state, const TrainerConfig& cfg, std::span<const double> f_obs,
                        std::span<const double> p_obs, double P_max) {
  const std::size_t m = state.nodes();
  if (f_obs.size() != m || p_obs.size() != m) throw ShapeError("estimator_signal: size mismatch");
  if (cfg.estimator == Estimator::global_signal) {
    double s = state.mu_p * rewards::power_slack(p_obs, P_max);
    for (std::size_t i = 0; i < m; ++i) s += state.lambda[i] * f_obs[i];
    return {s};
  }
  Vector s(m);
  const double share = P_max / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) s[i] = state.lambda[i] * f_obs[i] + state.mu_p * (share - p_obs[i]);
  return s;
}

aggnn::FilterTensor estimate_gradient(const TrainerState& state, const TrainerConfig& cfg,
                                      std::span<const aggnn::FilterTensor> per_node_score_grads,
                                      std::span<const double> f_obs, std::span<const double> p_obs, double P_max,
                                      std::span<const double> signal_offset) {
  const std::size_t m = state.nodes();
  if (per_node_score_grads.size() != m) throw ShapeError("estimate_gradient: expected one gradient per node");
  Vector signal = estimator_signal(state, cfg, f_obs, p_obs, P_max);
  if (!signal_offset.empty()) {
    if (signal_offset.size() != signal.size()) throw ShapeError("estimate_gradient: baseline size mismatch");
    for (std::size_t k = 0; k < signal.size(); ++k) signal[k] -= signal_offset[k];
  }
  aggnn::FilterTensor g = state.A.zeros_like();
  for (std::size_t i = 0; i < m; ++i) {
    const double weight = signal.size() == 1 ? signal[0] : signal[i];
    g.add_scaled(per_node_score_grads[i], weight);
  }
  return g;
}

namespace {

double step_A(TrainerState& state, const TrainerConfig& cfg, aggnn::FilterTensor g) {
  const double norm = g.norm();
  if (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) g.scale(cfg.grad_clip / norm);
  if (cfg.momentum > 0.0) {
    if (!state.velocity.same_shape(g)) state.velocity = g.zeros_like();
    state.velocity.scale(cfg.momentum);
    state.velocity.add_scaled(g, 1.0);
    state.A.add_scaled(state.velocity, state.eps.A);
  } else {
    state.A.add_scaled(g, state.eps.A);
  }
  return norm;
}

}  // namespace

double primal_step_A(TrainerState& state, const TrainerConfig& cfg,
                     std::span<const aggnn::FilterTensor> per_node_score_grads, std::span<const double> f_obs,
                     std::span<const double> p_obs, double P_max) {
  const auto g = estimate_gradient(state, cfg, per_node_score_grads, f_obs, p_obs, P_max);
  return step_A(state, cfg, g);
}

void dual_step(TrainerState& state, std::span<const double> f_obs, double slack_obs) {
  if (f_obs.size() != state.nodes()) throw ShapeError("dual_step: reward size mismatch");
  for (std::size_t i = 0; i < state.nodes(); ++i)
    state.lambda[i] = std::max(0.0, state.lambda[i] - state.eps.dual * (f_obs[i] - state.r[i]));
  state.mu_p = std::max(0.0, state.mu_p - state.eps.dual * slack_obs);
}

void sync_local_copies(TrainerState& state, const NodeMask& active) {
  if (active.size() != state.A_local.size()) throw ShapeError("sync_local_copies: mask size mismatch");
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i]) state.A_local[i] = state.A;
}

void write_log_header(std::ostream& out) {
  out << "tau,u0_r,sumrate_obs,power_obs,constraint_violation,lambda_mean,mu_p,grad_norm,sumrate_ma,power_ma,"
         "sumrate_det\n";
}

void write_log_row(std::ostream& out, const LogRow& row) {
  std::ostringstream line;
  line.precision(10);
  line << row.tau << ',' << row.u0_r << ',' << row.sumrate_obs << ',' << row.power_obs << ','
       << row.constraint_violation << ',' << row.lambda_mean << ',' << row.mu_p << ',' << row.grad_norm << ','
       << row.sumrate_ma << ',' << row.power_ma << ',' << row.sumrate_det << '\n';
  out << line.str();
}

namespace {

class MovingAverage {
 public:
  explicit MovingAverage(std::size_t window) : window_(std::max<std::size_t>(window, 1)) {}
  double push(double v) {
    values_.push_back(v);
    sum_ += v;
    if (values_.size() > window_) {
      sum_ -= values_.front();
      values_.pop_front();
    }
    return sum_ / static_cast<double>(values_.size());
  }

 private:
  std::size_t window_;
  std::deque<double> values_;
  double sum_ = 0.0;
};

}  // namespace

TrainResult train(const TrainerConfig& cfg, Environment& env, aggnn::FilterTensor initial, const Observer& observer,
                  const Checkpointer& checkpoint) {
  const std::size_t m = env.nodes();
  env.reward.validate(m);
  if (env.K < 1) throw std::invalid_argument("invalid parameter: K must be >= 1");

  TrainResult result;
  result.state = TrainerState::initial(std::move(initial), m, cfg.eps);
  auto& st = result.state;
  result.log.reserve(cfg.iterations);

  auto agg = graphflow::AggregationState::cold(m, env.K);
  MovingAverage rate_ma(cfg.ma_window);
  MovingAverage power_ma(cfg.ma_window);

  std::vector<aggnn::FilterTensor> score_grads(m);
  Vector z(m);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    st.tau = it;
    const NodeMask& active = env.schedule.sample(it);
    const Matrix& gain = env.channel.gain();
    const Vector& x = env.node_state.x();

    sync_local_copies(st, active);
    const auto gs = graphflow::sparsify(gain, env.reward.eta0, active);
    agg = graphflow::advance_aggregation(agg, gs, x);

    std::vector<aggnn::LayerActivations> acts(m);
    for (std::size_t i = 0; i < m; ++i) {
      auto fr = aggnn::forward(st.A_local[i], agg.sequence(i));
      z[i] = fr.z;
      acts[i] = std::move(fr.acts);
    }
    const auto sample = policy::sample(z, env.reward.p0, cfg.seed, it);
    for (std::size_t i = 0; i < m; ++i) score_grads[i] = aggnn::backward(st.A_local[i], acts[i], sample.score[i]);

    const Matrix mask = rewards::interference_mask(gain, env.reward.eta0, env.reward.full_interference);
    const Vector rates = rewards::sumrate(sample.actions, gain, mask, env.reward.noise_floor);
    Vector f = rates;
    if (env.reward.kind == rewards::RewardKind::demand)
      for (std::size_t i = 0; i < m; ++i) f[i] -= x[i];
    const double slack = rewards::power_slack(sample.actions, env.reward.P_max);
    // The budget enters the duals in units of p0, which keeps mu_p and the step
    // sizes independent of the power scale (only p0 / noise matters to rates).
    Vector on(m);
    for (std::size_t i = 0; i < m; ++i) on[i] = sample.actions[i] / env.reward.p0;
    const double budget = env.reward.P_max / env.reward.p0;
    const double slack_units = slack / env.reward.p0;

    const Vector det_actions = policy::threshold_actions(z, env.reward.p0);
    const double det_rate = rewards::utility_u0(rewards::sumrate(det_actions, gain, mask, env.reward.noise_floor));

    if (observer) observer(IterationView{it, gain, active, x, sample.actions, rates});

    LogRow row;
    row.tau = it;
    row.u0_r = rewards::utility_u0(st.r);
    row.sumrate_obs = rewards::utility_u0(rates);
    row.power_obs = env.reward.P_max - slack;
    row.constraint_violation = row.power_obs - env.reward.P_max;
    row.lambda_mean = std::accumulate(st.lambda.begin(), st.lambda.end(), 0.0) / static_cast<double>(m);
    row.mu_p = st.mu_p;
    row.sumrate_ma = rate_ma.push(row.sumrate_obs);
    row.power_ma = power_ma.push(row.power_obs);
    row.sumrate_det = det_rate;

    // Primal then dual, both at the pre-update (r, lambda, mu_p).
    const Vector r_before = st.r;
    const Vector signal = estimator_signal(st, cfg, f, on, budget);
    Vector offset;
    if (cfg.use_baseline && st.baseline_ready) offset = st.signal_baseline;
    const auto g = estimate_gradient(st, cfg, score_grads, f, on, budget, offset);
    if (cfg.use_baseline) {
      if (!st.baseline_ready) {
        st.signal_baseline = signal;
        st.baseline_ready = true;
      } else {
        for (std::size_t k = 0; k < signal.size(); ++k)
          st.signal_baseline[k] = cfg.baseline_decay * st.signal_baseline[k] + (1.0 - cfg.baseline_decay) * signal[k];
      }
    }

    primal_step_r(st);
    row.grad_norm = step_A(st, cfg, g);

    Vector r_after = st.r;
    st.r = r_before;
    dual_step(st, f, slack_units);
    st.r = std::move(r_after);

    if (!std::isfinite(row.u0_r) || std::abs(rewards::utility_u0(st.r)) > cfg.divergence_bound) {
      std::ostringstream msg;
      msg << "training diverged at tau=" << it << ": u0(r)=" << rewards::utility_u0(st.r)
          << " exceeds bound " << cfg.divergence_bound << " (mu_p=" << st.mu_p << ", |A|=" << st.A.norm() << ")";
      throw DivergenceError(msg.str());
    }

    result.log.push_back(row);
    if (checkpoint && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) checkpoint(it + 1, st.A);
    env.channel.step();
    env.node_state.step();
  }
  st.tau = cfg.iterations;
  result.A = st.A;
  return result;
}

}  // namespace wagnn::pdtrainer
