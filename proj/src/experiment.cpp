#include "wagnn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "wagnn/baselines.hpp"
#include "wagnn/graphflow.hpp"
#include "wagnn/policy.hpp"
#include "wagnn/rewards.hpp"
#include "wagnn/rng.hpp"

namespace wagnn::experiment {

namespace {

using json = nlohmann::json;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("invalid value for " + key + ": '" + value + "' (expected " + expected + ")", {key});
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value, "a nonnegative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, end);
}

struct Field {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field field(const char* name, T ExperimentConfig::*member) {
  Field f;
  f.name = name;
  const std::string key = name;
  if constexpr (std::is_same_v<T, bool>) {
    f.set = [member, key](ExperimentConfig& c, const std::string& v) { c.*member = parse_bool(key, v); };
    f.get = [member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); };
  } else if constexpr (std::is_same_v<T, double>) {
    f.set = [member, key](ExperimentConfig& c, const std::string& v) { c.*member = parse_double(key, v); };
    f.get = [member](const ExperimentConfig& c) { return format_double(c.*member); };
  } else if constexpr (std::is_same_v<T, std::string>) {
    f.set = [member](ExperimentConfig& c, const std::string& v) { c.*member = v; };
    f.get = [member](const ExperimentConfig& c) { return c.*member; };
  } else {
    f.set = [member, key](ExperimentConfig& c, const std::string& v) {
      c.*member = static_cast<T>(parse_uint(key, v));
    };
    f.get = [member](const ExperimentConfig& c) { return std::to_string(c.*member); };
  }
  return f;
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> all = {
      field("topology", &C::topology),
      field("m", &C::m),
      field("n_bs", &C::n_bs),
      field("gamma", &C::gamma),
      field("delta", &C::delta),
      field("sigma", &C::sigma),
      field("eta0", &C::eta0),
      field("full_interference", &C::full_interference),
      field("noise_floor", &C::noise_floor),
      field("K", &C::K),
      field("layers", &C::layers),
      field("features", &C::features),
      field("taps", &C::taps),
      field("init", &C::init),
      field("init_scale", &C::init_scale),
      field("init_shrink", &C::init_shrink),
      field("reward", &C::reward),
      field("demand_rate", &C::demand_rate),
      field("p0", &C::p0),
      field("P_max", &C::P_max),
      field("eps_A", &C::eps_A),
      field("eps_r", &C::eps_r),
      field("eps_dual", &C::eps_dual),
      field("estimator", &C::estimator),
      field("use_baseline", &C::use_baseline),
      field("baseline_decay", &C::baseline_decay),
      field("momentum", &C::momentum),
      field("grad_clip", &C::grad_clip),
      field("divergence_bound", &C::divergence_bound),
      field("iterations", &C::iterations),
      field("seed", &C::seed),
      field("activation", &C::activation),
      field("act_lambda", &C::act_lambda),
      field("act_subsets", &C::act_subsets),
      field("wmmse_iters", &C::wmmse_iters),
      field("ma_window", &C::ma_window),
      field("eval_iterations", &C::eval_iterations),
      field("checkpoint_every", &C::checkpoint_every),
      field("output_dir", &C::output_dir),
      field("checkpoint", &C::checkpoint),
      field("trials", &C::trials),
      field("m_prime", &C::m_prime),
      field("transfer_mode", &C::transfer_mode),
      field("sweep_axis", &C::sweep_axis),
      field("sweep_values", &C::sweep_values),
      field("perm_trials", &C::perm_trials),
      field("perm_tol", &C::perm_tol),
  };
  return all;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.name == key) return f;
  throw ConfigError("unknown config key: " + key, {key});
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.name);
    return out;
  }();
  return names;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { find_field(key).set(*this, value); }

std::string ExperimentConfig::get(const std::string& key) const { return find_field(key).get(*this); }

std::size_t ExperimentConfig::baseline_interval() const {
  if (activation != "async") return 1;
  return static_cast<std::size_t>(std::ceil(static_cast<double>(m) / mean_active() - 1e-12));
}

std::vector<double> ExperimentConfig::sweep_points() const { return parse_list("sweep_values", sweep_values); }

void ExperimentConfig::validate() const {
  std::vector<std::pair<std::string, std::string>> bad;
  auto check = [&](bool ok, const char* key, const std::string& msg) {
    if (!ok) bad.emplace_back(key, msg);
  };
  check(topology == "adhoc" || topology == "cellular", "topology", "must be adhoc or cellular");
  check(m >= 1, "m", "must be >= 1");
  if (topology == "cellular") check(n_bs >= 1 && n_bs <= m, "n_bs", "must satisfy 1 <= n_bs <= m");
  check(gamma > 0.0 && std::isfinite(gamma), "gamma", "must be positive");
  check(delta >= 0.0 && delta <= 1.0, "delta", "must lie in [0, 1]");
  check(sigma > 0.0 && std::isfinite(sigma), "sigma", "must be positive");
  check(eta0 >= 0.0, "eta0", "must be nonnegative");
  check(noise_floor > 0.0, "noise_floor", "must be positive");
  check(K >= 1, "K", "must be >= 1");
  check(layers >= 1, "layers", "must be >= 1");
  check(features >= 1, "features", "must be >= 1");
  check(taps >= 1, "taps", "must be >= 1");
  check(init == "near_identity" || init == "uniform", "init", "must be near_identity or uniform");
  check(init_scale > 0.0, "init_scale", "must be positive");
  check(init_shrink >= 0.0, "init_shrink", "must be nonnegative");
  check(reward == "sumrate" || reward == "demand", "reward", "must be sumrate or demand");
  check(demand_rate >= 0.0, "demand_rate", "must be nonnegative");
  check(p0 > 0.0 && std::isfinite(p0), "p0", "must be positive");
  check(P_max >= 0.0 && P_max <= static_cast<double>(m) * p0 * (1.0 + 1e-12), "P_max",
        "must lie in [0, m * p0] (0 selects m * p0 / 2)");
  check(eps_A >= 0.0, "eps_A", "must be nonnegative");
  check(eps_r >= 0.0, "eps_r", "must be nonnegative");
  check(eps_dual >= 0.0, "eps_dual", "must be nonnegative");
  check(estimator == "per_node" || estimator == "global", "estimator", "must be per_node or global");
  check(baseline_decay >= 0.0 && baseline_decay < 1.0, "baseline_decay", "must lie in [0, 1)");
  check(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
  check(grad_clip >= 0.0, "grad_clip", "must be nonnegative (0 disables)");
  check(divergence_bound > 0.0, "divergence_bound", "must be positive");
  check(activation == "sync" || activation == "async", "activation", "must be sync or async");
  check(act_lambda >= 0.0 && act_lambda <= static_cast<double>(m), "act_lambda", "must lie in [0, m] (0 selects m / 2)");
  check(act_subsets >= 1, "act_subsets", "must be >= 1");
  check(ma_window >= 1, "ma_window", "must be >= 1");
  check(output_dir.size() > 0, "output_dir", "must not be empty");
  check(transfer_mode == "same" || transfer_mode == "scaled", "transfer_mode", "must be same or scaled");
  check(sweep_axis == "hops" || sweep_axis == "delta", "sweep_axis", "must be hops or delta");
  try {
    const auto pts = sweep_points();
    bool ok = !pts.empty();
    for (double v : pts) {
      if (sweep_axis == "hops") ok = ok && v >= 1.0 && v == std::floor(v);
      if (sweep_axis == "delta") ok = ok && v >= 0.0 && v <= 1.0;
    }
    check(ok, "sweep_values", "must be a nonempty comma list valid for the sweep axis");
  } catch (const ConfigError&) {
    check(false, "sweep_values", "must be a comma separated list of numbers");
  }
  check(perm_tol > 0.0, "perm_tol", "must be positive");
  if (bad.empty()) return;
  std::string msg = "invalid config:";
  std::vector<std::string> keys;
  for (const auto& [key, why] : bad) {
    msg += "\n  " + key + ": " + why;
    keys.push_back(key);
  }
  throw ConfigError(msg, keys);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> bad;
  std::string msg;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bad.push_back("line " + std::to_string(lineno));
      msg += "\n  line " + std::to_string(lineno) + ": expected key = value";
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      cfg.set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      bad.push_back(key);
      msg += "\n  line " + std::to_string(lineno) + ": " + e.what();
    }
  }
  if (!bad.empty()) throw ConfigError("invalid config file:" + msg, bad);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.name + " = " + f.get(cfg) + "\n";
  return out;
}

Seeds Seeds::from_root(std::uint64_t root, std::uint64_t run) {
  Seeds s;
  s.topology = rng::derive(root, rng::Tag::topology);
  s.fading = rng::derive(root, rng::Tag::fading, {run});
  s.activation = rng::derive(root, rng::Tag::activation, {run});
  s.policy = rng::derive(root, rng::Tag::policy, {run});
  s.init = rng::derive(root, rng::Tag::init);
  s.demand = rng::derive(root, rng::Tag::demand, {run});
  s.baseline = rng::derive(root, rng::Tag::baseline, {run});
  return s;
}

netgen::NetworkTopology build_topology(const ExperimentConfig& cfg, std::size_t m, std::uint64_t seed) {
  if (cfg.topology == "cellular") return netgen::generate_cellular(cfg.n_bs, m, seed, cfg.gamma);
  return netgen::generate_adhoc(m, cfg.gamma, seed);
}

pdtrainer::Environment build_environment(const ExperimentConfig& cfg, const netgen::NetworkTopology& topo,
                                         const Seeds& seeds, double P_max) {
  const std::size_t m = topo.m;
  const auto mode = cfg.reward == "demand" ? netgen::NodeStateMode::demand_poisson : netgen::NodeStateMode::constant_one;
  auto schedule = cfg.activation == "async"
                      ? graphflow::ActivationSchedule::asynchronous(m, cfg.act_subsets,
                                                                    cfg.mean_active() * static_cast<double>(m) /
                                                                        static_cast<double>(cfg.m),
                                                                    seeds.activation)
                      : graphflow::ActivationSchedule::synchronous(m);
  rewards::RewardConfig reward;
  reward.kind = cfg.reward == "demand" ? rewards::RewardKind::demand : rewards::RewardKind::sumrate;
  reward.noise_floor = cfg.noise_floor;
  reward.eta0 = cfg.eta0;
  reward.P_max = P_max;
  reward.p0 = cfg.p0;
  reward.full_interference = cfg.full_interference;
  return pdtrainer::Environment{netgen::ChannelProcess(topo.pathloss, cfg.delta, cfg.sigma, seeds.fading),
                                netgen::NodeStateProcess(m, mode, cfg.demand_rate, seeds.demand), std::move(schedule),
                                reward, cfg.K};
}

std::vector<aggnn::LayerShape> layer_spec(const ExperimentConfig& cfg) {
  return aggnn::uniform_layers(cfg.layers, cfg.features, cfg.taps);
}

aggnn::FilterTensor initial_filters(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.init == "uniform") return aggnn::init_filters(layer_spec(cfg), cfg.init_scale, seed);
  return aggnn::init_near_identity(layer_spec(cfg), cfg.init_scale, cfg.init_shrink, seed);
}

pdtrainer::TrainerConfig trainer_config(const ExperimentConfig& cfg, const Seeds& seeds) {
  pdtrainer::TrainerConfig t;
  t.eps = {cfg.eps_A, cfg.eps_r, cfg.eps_dual};
  t.estimator = cfg.estimator == "global" ? pdtrainer::Estimator::global_signal : pdtrainer::Estimator::per_node;
  t.use_baseline = cfg.use_baseline;
  t.baseline_decay = cfg.baseline_decay;
  t.momentum = cfg.momentum;
  t.grad_clip = cfg.grad_clip;
  t.iterations = cfg.iterations;
  t.divergence_bound = cfg.divergence_bound;
  t.seed = seeds.policy;
  t.ma_window = cfg.ma_window;
  t.checkpoint_every = cfg.checkpoint_every;
  return t;
}

MethodSummary summarize(const RateTrace& trace, std::size_t window) {
  MethodSummary s;
  const std::size_t n = trace.agg.size();
  if (n == 0) return s;
  const std::size_t lo = n - std::min(n, std::max<std::size_t>(window, 1));
  auto mean = [&](const Vector& v) {
    if (v.size() != n) return 0.0;
    return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(lo), v.end(), 0.0) / static_cast<double>(n - lo);
  };
  s.agg = mean(trace.agg);
  s.agg_det = mean(trace.agg_det);
  s.equal = mean(trace.equal);
  s.random = mean(trace.random);
  s.wmmse = mean(trace.wmmse);
  s.agg_power = mean(trace.agg_power);
  return s;
}

BaselineTracker::BaselineTracker(const ExperimentConfig& cfg, std::size_t m, double P_max, std::uint64_t seed)
    : m_(m),
      P_max_(P_max),
      p0_(cfg.p0),
      eta0_(cfg.eta0),
      full_(cfg.full_interference),
      noise_(cfg.noise_floor),
      wmmse_iters_(cfg.wmmse_iterations()),
      interval_(cfg.baseline_interval()),
      seed_(seed) {}

void BaselineTracker::observe(std::uint64_t t, const Matrix& gain, RateTrace& trace) {
  if (t % interval_ == 0 || equal_.empty()) {
    equal_ = baselines::equal_power(m_, P_max_);
    random_ = baselines::random_power(m_, P_max_, p0_, seed_, t);
    wmmse_ = baselines::wmmse(baselines::threshold_gain(gain, eta0_), p0_, wmmse_iters_, noise_).powers;
  }
  const Matrix mask = rewards::interference_mask(gain, eta0_, full_);
  trace.equal.push_back(rewards::utility_u0(rewards::sumrate(equal_, gain, mask, noise_)));
  trace.random.push_back(rewards::utility_u0(rewards::sumrate(random_, gain, mask, noise_)));
  trace.wmmse.push_back(rewards::utility_u0(rewards::sumrate(wmmse_, gain, mask, noise_)));
}

TrainingRun run_training(const ExperimentConfig& cfg, const pdtrainer::Checkpointer& checkpoint) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Seeds seeds = Seeds::from_root(cfg.seed);
  TrainingRun run;
  run.topology = build_topology(cfg, cfg.m, seeds.topology);
  auto env = build_environment(cfg, run.topology, seeds, cfg.budget());
  BaselineTracker tracker(cfg, cfg.m, cfg.budget(), seeds.baseline);
  auto observer = [&](const pdtrainer::IterationView& v) { tracker.observe(v.tau, v.gain, run.trace); };
  run.result = pdtrainer::train(trainer_config(cfg, seeds), env, initial_filters(cfg, seeds.init), observer,
                                checkpoint);
  for (const auto& row : run.result.log) {
    run.trace.agg.push_back(row.sumrate_obs);
    run.trace.agg_det.push_back(row.sumrate_det);
    run.trace.agg_power.push_back(row.power_obs);
  }
  run.final_ma = summarize(run.trace, cfg.ma_window);
  const std::size_t n = run.trace.agg_power.size();
  if (n > 0) {
    const std::size_t tail = std::max<std::size_t>(n / 10, 1);
    run.tail_power_mean =
        std::accumulate(run.trace.agg_power.end() - static_cast<std::ptrdiff_t>(tail), run.trace.agg_power.end(), 0.0) /
        static_cast<double>(tail);
  }
  run.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

RateTrace evaluate(const ExperimentConfig& cfg, const aggnn::FilterTensor& A, const netgen::NetworkTopology& topo,
                   double P_max, std::uint64_t run, std::size_t iterations) {
  const Seeds seeds = Seeds::from_root(cfg.seed, run);
  auto env = build_environment(cfg, topo, seeds, P_max);
  env.reward.validate(topo.m);
  BaselineTracker tracker(cfg, topo.m, P_max, seeds.baseline);
  auto agg = graphflow::AggregationState::cold(topo.m, cfg.K);
  RateTrace trace;
  Vector z(topo.m);
  for (std::size_t t = 0; t < iterations; ++t) {
    const Matrix& gain = env.channel.gain();
    const auto gs = graphflow::sparsify(gain, cfg.eta0, env.schedule.sample(t));
    agg = graphflow::advance_aggregation(agg, gs, env.node_state.x());
    for (std::size_t i = 0; i < topo.m; ++i) z[i] = aggnn::evaluate(A, agg.sequence(i));
    const auto sample = policy::sample(z, cfg.p0, seeds.policy, t);
    const Vector det = policy::threshold_actions(z, cfg.p0);
    const Matrix mask = rewards::interference_mask(gain, cfg.eta0, cfg.full_interference);
    trace.agg.push_back(rewards::utility_u0(rewards::sumrate(sample.actions, gain, mask, cfg.noise_floor)));
    trace.agg_det.push_back(rewards::utility_u0(rewards::sumrate(det, gain, mask, cfg.noise_floor)));
    trace.agg_power.push_back(std::accumulate(sample.actions.begin(), sample.actions.end(), 0.0));
    tracker.observe(t, gain, trace);
    env.channel.step();
    env.node_state.step();
  }
  return trace;
}

std::vector<PermTrial> permutation_test(const ExperimentConfig& cfg, const aggnn::FilterTensor& A,
                                        std::size_t trials) {
  const std::size_t m = cfg.m;
  const std::size_t steps = cfg.K + 3;
  std::vector<PermTrial> out;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::uint64_t key = rng::derive(cfg.seed, rng::Tag::permutation, {trial});
    rng::Stream stream(key);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[stream() % i]);

    const auto topo = netgen::generate_adhoc(m, cfg.gamma, rng::mix(key ^ 1));
    netgen::ChannelProcess channel(topo.pathloss, cfg.delta, cfg.sigma, rng::mix(key ^ 2));
    auto orig = graphflow::AggregationState::cold(m, cfg.K);
    auto relabelled = orig;
    PermTrial report{trial, 0.0, 0.0};
    for (std::size_t t = 0; t < steps; ++t) {
      NodeMask active(m);
      Vector x(m);
      for (std::size_t i = 0; i < m; ++i) {
        active[i] = stream.bernoulli(0.7);
        x[i] = stream.uniform(0.0, 2.0);
      }
      const Matrix& gain = channel.gain();
      orig = graphflow::advance_aggregation(orig, graphflow::sparsify(gain, cfg.eta0, active), x);
      relabelled = graphflow::advance_aggregation(
          relabelled, graphflow::sparsify(permute(gain, perm), cfg.eta0, permute(active, perm)), permute(x, perm));
      channel.step();
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double phi = aggnn::evaluate(A, orig.sequence(perm[i]));
      const double phi_perm = aggnn::evaluate(A, relabelled.sequence(i));
      report.phi_deviation = std::max(report.phi_deviation, std::abs(phi_perm - phi));
    }
    Vector p(m);
    for (auto& v : p) v = stream.uniform(0.0, cfg.p0);
    const Matrix& gain = channel.gain();
    const Matrix mask = rewards::interference_mask(gain, cfg.eta0, cfg.full_interference);
    const Vector rates = rewards::sumrate(p, gain, mask, cfg.noise_floor);
    const Vector rates_perm =
        rewards::sumrate(permute(p, perm), permute(gain, perm), permute(mask, perm), cfg.noise_floor);
    for (std::size_t i = 0; i < m; ++i)
      report.reward_deviation = std::max(report.reward_deviation, std::abs(rates_perm[i] - rates[perm[i]]));
    out.push_back(report);
  }
  return out;
}

namespace {

double scaled_budget(const ExperimentConfig& cfg, std::size_t m_prime) {
  return cfg.budget() * static_cast<double>(m_prime) / static_cast<double>(cfg.m);
}

}  // namespace

std::vector<TransferTrial> transfer(const ExperimentConfig& cfg, const aggnn::FilterTensor& A, bool scaled,
                                    std::size_t m_prime, std::size_t trials) {
  if (m_prime == 0) m_prime = cfg.m;
  std::vector<TransferTrial> out;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::uint64_t seed = rng::derive(cfg.seed, rng::Tag::trial, {trial, m_prime, scaled ? 1u : 0u});
    netgen::NetworkTopology topo;
    if (cfg.topology == "cellular")
      topo = netgen::generate_cellular(cfg.n_bs, m_prime, seed, cfg.gamma);
    else
      topo = netgen::generate_adhoc(m_prime, cfg.gamma, seed,
                                    scaled ? netgen::AdhocGeometry::scaled(cfg.m, m_prime)
                                           : netgen::AdhocGeometry::standard(m_prime));
    const auto trace = evaluate(cfg, A, topo, scaled_budget(cfg, m_prime), 1000 + trial, cfg.eval_iterations);
    out.push_back({trial, m_prime, summarize(trace, trace.agg.size())});
  }
  return out;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value", {"sweep_values"});
  std::vector<SweepPoint> out;
  for (double v : values) {
    ExperimentConfig c = cfg;
    if (axis == "hops")
      c.K = static_cast<std::size_t>(v);
    else if (axis == "delta")
      c.delta = v;
    else
      throw ConfigError("unknown sweep axis " + axis, {"sweep_axis"});
    c.validate();
    const auto run = run_training(c);
    const auto trace = evaluate(c, run.result.A, run.topology, c.budget(), 1, c.eval_iterations);
    out.push_back({v, run.final_ma, summarize(trace, trace.agg.size())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// commands

namespace {

std::filesystem::path prepare_output(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const auto probe = dir / ".write-test";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
  return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

json to_json(const MethodSummary& s) {
  return json{{"agg_gnn", s.agg}, {"agg_gnn_threshold", s.agg_det}, {"equal", s.equal}, {"random", s.random},
              {"wmmse", s.wmmse}, {"agg_gnn_power", s.agg_power}, {"ratio_to_wmmse", s.ratio()}};
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  for (const auto& key : ExperimentConfig::keys()) j[key] = cfg.get(key);
  return j;
}

void write_baselines_csv(const std::filesystem::path& path, const RateTrace& trace, std::size_t window) {
  auto out = open_out(path);
  out << "tau,equal,random,wmmse,equal_ma,random_ma,wmmse_ma\n";
  double se = 0, sr = 0, sw = 0;
  const std::size_t n = trace.equal.size();
  for (std::size_t t = 0; t < n; ++t) {
    se += trace.equal[t];
    sr += trace.random[t];
    sw += trace.wmmse[t];
    if (t >= window) {
      se -= trace.equal[t - window];
      sr -= trace.random[t - window];
      sw -= trace.wmmse[t - window];
    }
    const double cnt = static_cast<double>(std::min(t + 1, window));
    out << t << ',' << trace.equal[t] << ',' << trace.random[t] << ',' << trace.wmmse[t] << ',' << se / cnt << ','
        << sr / cnt << ',' << sw / cnt << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const RateTrace& trace) {
  auto out = open_out(path);
  out << "t,agg_gnn,agg_gnn_threshold,equal,random,wmmse,agg_gnn_power\n";
  for (std::size_t t = 0; t < trace.agg.size(); ++t)
    out << t << ',' << trace.agg[t] << ',' << trace.agg_det[t] << ',' << trace.equal[t] << ',' << trace.random[t]
        << ',' << trace.wmmse[t] << ',' << trace.agg_power[t] << '\n';
}

}  // namespace

aggnn::FilterTensor filters_for(const ExperimentConfig& cfg) {
  if (cfg.checkpoint.empty()) return initial_filters(cfg, Seeds::from_root(cfg.seed).init);
  if (!std::filesystem::is_regular_file(cfg.checkpoint)) throw IoError("cannot read checkpoint " + cfg.checkpoint);
  const aggnn::FilterTensor A = aggnn::load_filters(cfg.checkpoint);
  if (A.layers() != layer_spec(cfg))
    throw ConfigError("checkpoint layer spec does not match layers/features/taps in the config",
                      {"checkpoint", "layers", "features", "taps"});
  return A;
}

std::string cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dir = prepare_output(cfg);
  write_text(dir / "config.conf", to_text(cfg));
  auto checkpoint = [&](std::uint64_t tau, const aggnn::FilterTensor& A) {
    aggnn::save_filters(A, dir / ("filters_" + std::to_string(tau) + ".txt"));
  };
  const auto run = run_training(cfg, checkpoint);
  {
    auto out = open_out(dir / "training_log.csv");
    pdtrainer::write_log_header(out);
    for (const auto& row : run.result.log) pdtrainer::write_log_row(out, row);
  }
  write_baselines_csv(dir / "baselines.csv", run.trace, cfg.ma_window);
  aggnn::save_filters(run.result.A, dir / "filters.txt");
  netgen::save_topology(run.topology, dir / "topology.json");

  json summary;
  summary["command"] = "train";
  summary["iterations"] = cfg.iterations;
  summary["ma_window"] = cfg.ma_window;
  summary["P_max"] = cfg.budget();
  summary["final_moving_average"] = to_json(run.final_ma);
  summary["tail_power_mean"] = run.tail_power_mean;
  summary["constraint_violation"] = run.tail_power_mean - cfg.budget();
  summary["lambda_mean"] = run.result.log.empty() ? 1.0 : run.result.log.back().lambda_mean;
  summary["mu_p"] = run.result.state.mu_p;
  summary["elapsed_seconds"] = run.elapsed_seconds;
  summary["config"] = config_json(cfg);
  const std::string text = summary.dump(2);
  write_text(dir / "summary.json", text + "\n");
  return text;
}

std::string cmd_baseline(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dir = prepare_output(cfg);
  const Seeds seeds = Seeds::from_root(cfg.seed);
  const auto topo = build_topology(cfg, cfg.m, seeds.topology);
  auto env = build_environment(cfg, topo, seeds, cfg.budget());
  BaselineTracker tracker(cfg, cfg.m, cfg.budget(), seeds.baseline);
  RateTrace trace;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    tracker.observe(t, env.channel.gain(), trace);
    env.channel.step();
  }
  write_baselines_csv(dir / "baselines.csv", trace, cfg.ma_window);
  trace.agg.assign(trace.equal.size(), 0.0);
  const auto s = summarize(trace, trace.equal.size());
  json summary{{"command", "baseline"},
               {"iterations", cfg.iterations},
               {"P_max", cfg.budget()},
               {"mean", {{"equal", s.equal}, {"random", s.random}, {"wmmse", s.wmmse}}},
               {"config", config_json(cfg)}};
  const std::string text = summary.dump(2);
  write_text(dir / "summary.json", text + "\n");
  return text;
}

std::string cmd_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto A = filters_for(cfg);
  const auto dir = prepare_output(cfg);
  const auto topo = build_topology(cfg, cfg.m, Seeds::from_root(cfg.seed).topology);
  const auto trace = evaluate(cfg, A, topo, cfg.budget(), 1, cfg.eval_iterations);
  write_trace_csv(dir / "eval.csv", trace);
  json summary{{"command", "eval"},
               {"eval_iterations", cfg.eval_iterations},
               {"P_max", cfg.budget()},
               {"mean", to_json(summarize(trace, trace.agg.size()))},
               {"config", config_json(cfg)}};
  const std::string text = summary.dump(2);
  write_text(dir / "summary.json", text + "\n");
  return text;
}

std::string cmd_transfer(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto A = filters_for(cfg);
  const auto dir = prepare_output(cfg);
  const bool scaled = cfg.transfer_mode == "scaled";
  const std::size_t m_prime = cfg.m_prime > 0 ? cfg.m_prime : cfg.m;
  const auto trials = transfer(cfg, A, scaled, m_prime, cfg.trials);
  MethodSummary mean;
  {
    auto out = open_out(dir / "transfer.csv");
    out << "trial,m,agg_gnn,agg_gnn_threshold,equal,random,wmmse,agg_gnn_power\n";
    for (const auto& t : trials) {
      out << t.trial << ',' << t.m << ',' << t.rates.agg << ',' << t.rates.agg_det << ',' << t.rates.equal << ','
          << t.rates.random << ',' << t.rates.wmmse << ',' << t.rates.agg_power << '\n';
      mean.agg += t.rates.agg;
      mean.agg_det += t.rates.agg_det;
      mean.equal += t.rates.equal;
      mean.random += t.rates.random;
      mean.wmmse += t.rates.wmmse;
      mean.agg_power += t.rates.agg_power;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(trials.size(), 1));
  for (double* v : {&mean.agg, &mean.agg_det, &mean.equal, &mean.random, &mean.wmmse, &mean.agg_power}) *v /= n;
  json summary{{"command", "transfer"}, {"mode", cfg.transfer_mode}, {"m_prime", m_prime},
               {"trials", cfg.trials},  {"mean", to_json(mean)},      {"config", config_json(cfg)}};
  const std::string text = summary.dump(2);
  write_text(dir / "summary.json", text + "\n");
  return text;
}

std::string cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dir = prepare_output(cfg);
  const auto points = sweep(cfg, cfg.sweep_axis, cfg.sweep_points());
  json rows = json::array();
  {
    auto out = open_out(dir / "sweep.csv");
    out << "axis,value,agg_gnn,agg_gnn_threshold,equal,random,wmmse,ratio,ratio_threshold,train_ma_agg_gnn,"
           "train_ma_wmmse,train_ma_ratio\n";
    for (const auto& p : points) {
      out << cfg.sweep_axis << ',' << p.value << ',' << p.eval.agg << ',' << p.eval.agg_det << ',' << p.eval.equal
          << ',' << p.eval.random << ',' << p.eval.wmmse << ',' << p.eval.ratio() << ',' << p.eval.ratio_det() << ','
          << p.train_ma.agg << ',' << p.train_ma.wmmse << ',' << p.train_ma.ratio() << '\n';
      rows.push_back({{"value", p.value}, {"eval", to_json(p.eval)}, {"train_ma", to_json(p.train_ma)}});
    }
  }
  json summary{{"command", "sweep"}, {"axis", cfg.sweep_axis}, {"points", rows}, {"config", config_json(cfg)}};
  const std::string text = summary.dump(2);
  write_text(dir / "summary.json", text + "\n");
  return text;
}

bool cmd_permtest(const ExperimentConfig& cfg, std::string* summary_out) {
  cfg.validate();
  const auto A = filters_for(cfg);
  const auto dir = prepare_output(cfg);
  const auto trials = permutation_test(cfg, A, cfg.perm_trials);
  double worst_phi = 0, worst_reward = 0;
  {
    auto out = open_out(dir / "permtest.csv");
    out.precision(6);
    out << "trial,phi_deviation,reward_deviation\n";
    for (const auto& t : trials) {
      out << t.trial << ',' << t.phi_deviation << ',' << t.reward_deviation << '\n';
      worst_phi = std::max(worst_phi, t.phi_deviation);
      worst_reward = std::max(worst_reward, t.reward_deviation);
    }
  }
  const bool pass = worst_phi <= cfg.perm_tol && worst_reward <= cfg.perm_tol;
  json summary{{"command", "permtest"},         {"trials", trials.size()},
               {"max_phi_deviation", worst_phi}, {"max_reward_deviation", worst_reward},
               {"tolerance", cfg.perm_tol},      {"pass", pass},
               {"config", config_json(cfg)}};
  const std::string text = summary.dump(2);
  write_text(dir / "summary.json", text + "\n");
  if (summary_out) *summary_out = text;
  return pass;
}

}  // namespace wagnn::experiment
