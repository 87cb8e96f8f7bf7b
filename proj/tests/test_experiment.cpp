#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "wagnn/experiment.hpp"

using namespace wagnn;
namespace ex = wagnn::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("wagnn_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ex::ExperimentConfig tiny(const fs::path& out) {
  ex::ExperimentConfig cfg;
  cfg.m = 6;
  cfg.K = 3;
  cfg.layers = 3;
  cfg.taps = 3;
  cfg.iterations = 40;
  cfg.eval_iterations = 20;
  cfg.ma_window = 10;
  cfg.trials = 2;
  cfg.perm_trials = 3;
  cfg.output_dir = out.string();
  return cfg;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("defaults describe the 25-node, 5-hop setup") {
  const ex::ExperimentConfig cfg;
  CHECK(cfg.m == 25);
  CHECK(cfg.K == 5);
  CHECK(cfg.delta == 0.3);
  CHECK(cfg.gamma == 2.2);
  CHECK(cfg.layers == 10);
  CHECK(cfg.features == 1);
  CHECK(cfg.taps == 10);
  CHECK(cfg.budget() == 12.5);
  CHECK(cfg.wmmse_iterations() == 5);
  CHECK(cfg.baseline_interval() == 1);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config text round trip") {
  ex::ExperimentConfig cfg;
  cfg.delta = 0.1;
  cfg.topology = "cellular";
  cfg.m = 50;
  cfg.full_interference = true;
  cfg.sweep_values = "0.1,0.3,0.999";
  CHECK(ex::parse_config(ex::to_text(cfg)) == cfg);
  for (const auto& key : ex::ExperimentConfig::keys()) {
    ex::ExperimentConfig copy;
    copy.set(key, cfg.get(key));
    CHECK(copy.get(key) == cfg.get(key));
  }
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(ex::parse_config("no_such_key = 3\n"), ex::ConfigError);
  CHECK_THROWS_AS(ex::parse_config("m = many\n"), ex::ConfigError);
  CHECK_THROWS_AS(ex::parse_config("just text\n"), ex::ConfigError);
  const auto cfg = ex::parse_config("# comment\n\nm = 10   # trailing\n delta=0.5\n");
  CHECK(cfg.m == 10);
  CHECK(cfg.delta == 0.5);
  CHECK_THROWS_AS(ex::load_config("/nonexistent/wagnn.conf"), ex::IoError);
}

TEST_CASE("validation names every offending key") {
  ex::ExperimentConfig cfg;
  cfg.delta = 1.5;
  cfg.m = 0;
  cfg.activation = "sometimes";
  try {
    cfg.validate();
    FAIL("expected a ConfigError");
  } catch (const ex::ConfigError& e) {
    auto has = [&](const std::string& k) { return std::find(e.keys.begin(), e.keys.end(), k) != e.keys.end(); };
    CHECK(has("delta"));
    CHECK(has("m"));
    CHECK(has("activation"));
  }
  ex::ExperimentConfig over;
  over.P_max = 100;  // above p0 * m
  CHECK_THROWS_AS(over.validate(), ex::ConfigError);
}

TEST_CASE("resolved values") {
  ex::ExperimentConfig cfg;
  cfg.activation = "async";
  cfg.m = 50;
  cfg.act_lambda = 25;
  CHECK(cfg.baseline_interval() == 2);
  cfg.act_lambda = 20;
  CHECK(cfg.baseline_interval() == 3);
  cfg.sweep_values = "0.1, 0.3,0.999";
  CHECK(cfg.sweep_points() == std::vector<double>{0.1, 0.3, 0.999});
}

TEST_CASE("seed substreams are independent of each other") {
  const auto a = ex::Seeds::from_root(1, 0);
  const auto b = ex::Seeds::from_root(1, 1);
  CHECK(a.topology == b.topology);
  CHECK(a.init == b.init);
  CHECK(a.fading != b.fading);
  CHECK(a.policy != b.policy);
  CHECK(a.fading != a.policy);
  CHECK(ex::Seeds::from_root(2).topology != a.topology);
}

TEST_CASE("permutation test on the identity and on trained-like filters") {
  auto cfg = tiny(scratch("perm"));
  const auto A = ex::initial_filters(cfg, 3);
  const auto trials = ex::permutation_test(cfg, A, 5);
  REQUIRE(trials.size() == 5);
  for (const auto& t : trials) {
    CHECK(t.phi_deviation <= 1e-9);
    CHECK(t.reward_deviation <= 1e-9);
  }
}

TEST_CASE("train command writes its artifacts") {
  const auto out = scratch("train");
  auto cfg = tiny(out);
  cfg.checkpoint_every = 20;
  const auto summary = ex::cmd_train(cfg);
  CHECK(summary.find("agg_gnn") != std::string::npos);
  for (const char* f : {"config.conf", "training_log.csv", "baselines.csv", "filters.txt", "filters_20.txt",
                        "filters_40.txt", "topology.json", "summary.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  const auto log = read(out / "training_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 41);
  CHECK(ex::load_config(out / "config.conf") == cfg);

  // the saved filters feed the other commands
  cfg.checkpoint = (out / "filters.txt").string();
  cfg.output_dir = (out / "eval").string();
  CHECK_NOTHROW(ex::cmd_eval(cfg));
  CHECK(fs::exists(out / "eval" / "eval.csv"));
  cfg.output_dir = (out / "transfer").string();
  cfg.transfer_mode = "scaled";
  cfg.m_prime = 9;
  CHECK_NOTHROW(ex::cmd_transfer(cfg));
  const auto transfer_csv = read(out / "transfer" / "transfer.csv");
  CHECK(transfer_csv.rfind("trial,m,agg_gnn", 0) == 0);
  CHECK(std::count(transfer_csv.begin(), transfer_csv.end(), '\n') == 3);
  fs::remove_all(out);
}

TEST_CASE("zero iterations still produce outputs") {
  const auto out = scratch("zero");
  auto cfg = tiny(out);
  cfg.iterations = 0;
  CHECK_NOTHROW(ex::cmd_train(cfg));
  CHECK(fs::exists(out / "filters.txt"));
  CHECK(aggnn::load_filters(out / "filters.txt") == ex::initial_filters(cfg, ex::Seeds::from_root(cfg.seed).init));
  fs::remove_all(out);
}

TEST_CASE("baseline, sweep and permtest commands") {
  const auto out = scratch("cmds");
  auto cfg = tiny(out);
  CHECK_NOTHROW(ex::cmd_baseline(cfg));
  CHECK(fs::exists(out / "baselines.csv"));
  cfg.sweep_axis = "delta";
  cfg.sweep_values = "0.2,0.9";
  CHECK_NOTHROW(ex::cmd_sweep(cfg));
  const auto sweep_csv = read(out / "sweep.csv");
  CHECK(std::count(sweep_csv.begin(), sweep_csv.end(), '\n') == 3);
  std::string summary;
  CHECK(ex::cmd_permtest(cfg, &summary));
  CHECK(fs::exists(out / "permtest.csv"));
  fs::remove_all(out);
}

TEST_CASE("missing or mismatched checkpoints") {
  auto cfg = tiny(scratch("ckpt"));
  cfg.checkpoint = "/nonexistent/filters.txt";
  CHECK_THROWS_AS(ex::filters_for(cfg), ex::IoError);
  const auto path = fs::temp_directory_path() / "wagnn_mismatch.txt";
  aggnn::save_filters(aggnn::init_filters(aggnn::uniform_layers(2, 1, 2), 1.0, 1), path);
  cfg.checkpoint = path.string();
  CHECK_THROWS_AS(ex::filters_for(cfg), ex::ConfigError);
  fs::remove(path);
}

TEST_CASE("unwritable output directory is an I/O error") {
  auto cfg = tiny("/proc/wagnn_cannot_write_here");
  CHECK_THROWS_AS(ex::cmd_baseline(cfg), ex::IoError);
}
