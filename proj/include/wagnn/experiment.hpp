#pragma once

// Experiment configuration and orchestration: training runs with paired
// baselines, frozen-policy evaluation, permutation tests, transference and
// parameter sweeps. Every command writes CSV (and a JSON summary) into the
// configured output directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wagnn/aggnn.hpp"
#include "wagnn/linalg.hpp"
#include "wagnn/netgen.hpp"
#include "wagnn/pdtrainer.hpp"

namespace wagnn::experiment {

/// Invalid configuration. `keys` lists every offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, std::vector<std::string> keys)
      : std::invalid_argument(what), keys(std::move(keys)) {}
  std::vector<std::string> keys;
};

/// Output directory or input file problems.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // network
  std::string topology = "adhoc";  // adhoc | cellular
  std::size_t m = 25;
  std::size_t n_bs = 5;
  double gamma = 2.2;
  double delta = 0.3;
  double sigma = 1.0;
  double eta0 = 0.0;
  bool full_interference = false;
  double noise_floor = 1.0;

  // architecture
  std::size_t K = 5;
  std::size_t layers = 10;
  std::size_t features = 1;
  std::size_t taps = 10;
  std::string init = "near_identity";  // near_identity | uniform
  double init_scale = 1.0;
  double init_shrink = 0.1;

  // reward and budget
  std::string reward = "sumrate";  // sumrate | demand
  double demand_rate = 1.0;
  double p0 = 1.0;
  double P_max = 0.0;  // 0: m * p0 / 2

  // trainer
  double eps_A = 2e-3;
  double eps_r = 1e-2;
  double eps_dual = 1e-3;
  std::string estimator = "per_node";  // per_node | global
  bool use_baseline = true;
  double baseline_decay = 0.99;
  double momentum = 0.0;
  double grad_clip = 1.0;
  double divergence_bound = 1e6;
  std::size_t iterations = 40000;
  std::uint64_t seed = 1;

  // activation
  std::string activation = "sync";  // sync | async
  double act_lambda = 0.0;          // 0: m / 2
  std::size_t act_subsets = 100;

  // baselines, evaluation and outputs
  std::size_t wmmse_iters = 0;  // 0: same as K
  std::size_t ma_window = 500;
  std::size_t eval_iterations = 2000;
  std::size_t checkpoint_every = 0;
  std::string output_dir = "out";
  std::string checkpoint;  // filter file for eval / transfer / permtest

  // command parameters
  std::size_t trials = 20;
  std::size_t m_prime = 0;           // 0: same as m
  std::string transfer_mode = "same";  // same | scaled
  std::string sweep_axis = "hops";   // hops | delta
  std::string sweep_values = "5,8";
  std::size_t perm_trials = 100;
  double perm_tol = 1e-9;

  bool operator==(const ExperimentConfig&) const = default;

  /// Every key in file order.
  static const std::vector<std::string>& keys();

  /// Sets one key from its text form; unknown keys and unparsable values throw ConfigError.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Checks every field; throws ConfigError naming all offending keys.
  void validate() const;

  // resolved values
  double budget() const { return P_max > 0.0 ? P_max : 0.5 * static_cast<double>(m) * p0; }
  double mean_active() const { return act_lambda > 0.0 ? act_lambda : 0.5 * static_cast<double>(m); }
  std::size_t wmmse_iterations() const { return wmmse_iters > 0 ? wmmse_iters : K; }
  /// Baseline refresh period: ceil(m / lambda) slots when asynchronous, else 1.
  std::size_t baseline_interval() const;
  std::vector<double> sweep_points() const;
};

/// "key = value" lines; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_text(const ExperimentConfig& cfg);

/// Independent substream seeds derived from the root seed. `run` separates
/// evaluation and trial draws from the training draws.
struct Seeds {
  std::uint64_t topology = 0;
  std::uint64_t fading = 0;
  std::uint64_t activation = 0;
  std::uint64_t policy = 0;
  std::uint64_t init = 0;
  std::uint64_t demand = 0;
  std::uint64_t baseline = 0;

  static Seeds from_root(std::uint64_t root, std::uint64_t run = 0);
};

netgen::NetworkTopology build_topology(const ExperimentConfig& cfg, std::size_t m, std::uint64_t seed);
pdtrainer::Environment build_environment(const ExperimentConfig& cfg, const netgen::NetworkTopology& topo,
                                         const Seeds& seeds, double P_max);
aggnn::FilterTensor initial_filters(const ExperimentConfig& cfg, std::uint64_t seed);
pdtrainer::TrainerConfig trainer_config(const ExperimentConfig& cfg, const Seeds& seeds);
std::vector<aggnn::LayerShape> layer_spec(const ExperimentConfig& cfg);

/// Per-iteration sum-rates of every method on one sequence of realizations.
struct RateTrace {
  Vector agg;
  Vector agg_det;
  Vector equal;
  Vector random;
  Vector wmmse;
  Vector agg_power;
};

/// Means over the last `window` entries of a trace.
struct MethodSummary {
  double agg = 0;
  double agg_det = 0;
  double equal = 0;
  double random = 0;
  double wmmse = 0;
  double agg_power = 0;

  double ratio() const { return wmmse > 0.0 ? agg / wmmse : 0.0; }
  double ratio_det() const { return wmmse > 0.0 ? agg_det / wmmse : 0.0; }
};

MethodSummary summarize(const RateTrace& trace, std::size_t window);

/// Replays Equal, Random and WMMSE on whatever realizations it is shown,
/// refreshing their powers every `interval` slots and holding them in between.
class BaselineTracker {
 public:
  BaselineTracker(const ExperimentConfig& cfg, std::size_t m, double P_max, std::uint64_t seed);
  /// Appends the three sum-rates for this slot to `trace`.
  void observe(std::uint64_t t, const Matrix& gain, RateTrace& trace);

 private:
  std::size_t m_;
  double P_max_;
  double p0_;
  double eta0_;
  bool full_;
  double noise_;
  std::size_t wmmse_iters_;
  std::size_t interval_;
  std::uint64_t seed_;
  Vector equal_, random_, wmmse_;
};

struct TrainingRun {
  netgen::NetworkTopology topology;
  pdtrainer::TrainResult result;
  RateTrace trace;
  MethodSummary final_ma;       // moving average over the last ma_window iterations
  double tail_power_mean = 0;   // mean total power over the last 10% of iterations
  double elapsed_seconds = 0;
};

/// Trains on the config's network with baselines replayed on the same realizations.
TrainingRun run_training(const ExperimentConfig& cfg,
                         const pdtrainer::Checkpointer& checkpoint = {});

/// Frozen-policy evaluation: fresh channel/activation draws (keyed by `run`)
/// on `topo`, every node using A.
RateTrace evaluate(const ExperimentConfig& cfg, const aggnn::FilterTensor& A, const netgen::NetworkTopology& topo,
                   double P_max, std::uint64_t run, std::size_t iterations);

struct PermTrial {
  std::size_t trial = 0;
  double phi_deviation = 0;
  double reward_deviation = 0;
};

/// Replays random histories and their relabelled copies through the
/// aggregation and the Agg-GNN; reports max |Phi(perm) - P^T Phi| per trial.
std::vector<PermTrial> permutation_test(const ExperimentConfig& cfg, const aggnn::FilterTensor& A, std::size_t trials);

struct TransferTrial {
  std::size_t trial = 0;
  std::size_t m = 0;
  MethodSummary rates;
};

/// Fresh networks of size m_prime (same layout, or equal density when scaled).
std::vector<TransferTrial> transfer(const ExperimentConfig& cfg, const aggnn::FilterTensor& A, bool scaled,
                                    std::size_t m_prime, std::size_t trials);

struct SweepPoint {
  double value = 0;
  MethodSummary train_ma;  // moving average at the end of training
  MethodSummary eval;      // frozen-policy evaluation on the training network
};

/// Trains one policy per value of the axis ("hops" sets K, "delta" sets delta).
std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values);

// Commands: each writes its outputs under cfg.output_dir and returns the JSON
// summary it wrote (as text).
std::string cmd_train(const ExperimentConfig& cfg);
std::string cmd_baseline(const ExperimentConfig& cfg);
std::string cmd_eval(const ExperimentConfig& cfg);
std::string cmd_transfer(const ExperimentConfig& cfg);
std::string cmd_sweep(const ExperimentConfig& cfg);
/// Returns true when every trial is within cfg.perm_tol.
bool cmd_permtest(const ExperimentConfig& cfg, std::string* summary = nullptr);

/// Loads cfg.checkpoint, or draws fresh filters when it is empty; the layer
/// spec must match the config's.
aggnn::FilterTensor filters_for(const ExperimentConfig& cfg);

}  // namespace wagnn::experiment
