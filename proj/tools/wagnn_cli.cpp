// wagnn: train, evaluate and test Aggregation-GNN power allocation policies.
//
// Every subcommand accepts --config FILE plus one --<key> flag per config key;
// flags override the file. Exit codes: 0 success, 1 invalid configuration,
// 2 property test failed, 3 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "wagnn/experiment.hpp"
#include "wagnn/pdtrainer.hpp"

namespace {

namespace ex = wagnn::experiment;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kPropertyFailure = 2;
constexpr int kIo = 3;

struct Invocation {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Invocation& inv) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("-c,--config", inv.config_path, "key = value config file");
  for (const auto& key : ex::ExperimentConfig::keys()) {
    sub->add_option_function<std::string>(
        "--" + key, [&inv, key](const std::string& v) { inv.overrides[key] = v; },
        "config key " + key + " (default " + ex::ExperimentConfig{}.get(key) + ")");
  }
  return sub;
}

ex::ExperimentConfig resolve(const Invocation& inv) {
  ex::ExperimentConfig cfg = inv.config_path.empty() ? ex::ExperimentConfig{} : ex::load_config(inv.config_path);
  for (const auto& [key, value] : inv.overrides) cfg.set(key, value);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation-GNN power allocation experiments"};
  app.require_subcommand(1);
  Invocation inv;
  auto* train = add_command(app, "train", "train a policy with paired baselines", inv);
  auto* permtest = add_command(app, "permtest", "permutation equivariance check on replayed histories", inv);
  auto* transfer = add_command(app, "transfer", "evaluate a frozen policy on fresh or larger networks", inv);
  auto* sweep = add_command(app, "sweep", "train one policy per hop count or delta value", inv);
  auto* baseline = add_command(app, "baseline", "run Equal, Random and WMMSE only", inv);
  auto* eval = add_command(app, "eval", "evaluate a frozen policy on the configured network", inv);
  bool dump_config = false;
  app.add_flag("--print-config", dump_config, "print the resolved config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    const auto cfg = resolve(inv);
    if (dump_config) {
      std::cout << ex::to_text(cfg);
      return kOk;
    }
    if (train->parsed()) {
      std::cout << ex::cmd_train(cfg) << '\n';
    } else if (permtest->parsed()) {
      std::string summary;
      const bool pass = ex::cmd_permtest(cfg, &summary);
      std::cout << summary << '\n';
      if (!pass) {
        std::cerr << "permtest: deviation above tolerance " << cfg.perm_tol << '\n';
        return kPropertyFailure;
      }
    } else if (transfer->parsed()) {
      std::cout << ex::cmd_transfer(cfg) << '\n';
    } else if (sweep->parsed()) {
      std::cout << ex::cmd_sweep(cfg) << '\n';
    } else if (baseline->parsed()) {
      std::cout << ex::cmd_baseline(cfg) << '\n';
    } else if (eval->parsed()) {
      std::cout << ex::cmd_eval(cfg) << '\n';
    }
  } catch (const ex::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ex::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const wagnn::pdtrainer::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
