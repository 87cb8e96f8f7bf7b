#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wagnn/aggnn.hpp"
#include "wagnn/baselines.hpp"
#include "wagnn/experiment.hpp"
#include "wagnn/graphflow.hpp"
#include "wagnn/netgen.hpp"
#include "wagnn/policy.hpp"
#include "wagnn/rewards.hpp"

namespace py = pybind11;
using namespace wagnn;
namespace ex = wagnn::experiment;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.flat().begin());
  return m;
}

Array from_matrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.flat().begin(), m.flat().end(), out.mutable_data());
  return out;
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return Vector(a.data(), a.data() + a.size());
}

Array from_vector(const Vector& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ex::ExperimentConfig make_config(const std::map<std::string, std::string>& overrides) {
  ex::ExperimentConfig cfg;
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

std::map<std::string, std::string> config_dict(const ex::ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& k : ex::ExperimentConfig::keys()) out[k] = cfg.get(k);
  return out;
}

py::dict summary_dict(const ex::MethodSummary& s) {
  py::dict d;
  d["agg_gnn"] = s.agg;
  d["agg_gnn_threshold"] = s.agg_det;
  d["equal"] = s.equal;
  d["random"] = s.random;
  d["wmmse"] = s.wmmse;
  d["agg_gnn_power"] = s.agg_power;
  d["ratio"] = s.ratio();
  return d;
}

py::dict topology_dict(const netgen::NetworkTopology& t) {
  py::dict d;
  std::vector<std::pair<double, double>> tx, rx;
  for (const auto& p : t.tx_pos) tx.emplace_back(p.x, p.y);
  for (const auto& p : t.rx_pos) rx.emplace_back(p.x, p.y);
  d["m"] = t.m;
  d["tx_pos"] = tx;
  d["rx_pos"] = rx;
  d["pairing"] = t.pairing;
  d["gamma"] = t.gamma;
  d["pathloss"] = from_matrix(t.pathloss);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Aggregation-GNN power allocation: core operations";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ex::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ex::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<pdtrainer::DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  // networks and channels
  m.def("generate_adhoc", [](std::size_t n, double gamma, std::uint64_t seed) {
    return topology_dict(netgen::generate_adhoc(n, gamma, seed));
  }, py::arg("m"), py::arg("gamma") = 2.2, py::arg("seed") = 0);
  m.def("generate_cellular", [](std::size_t n_bs, std::size_t users, std::uint64_t seed, double gamma) {
    return topology_dict(netgen::generate_cellular(n_bs, users, seed, gamma));
  }, py::arg("n_bs"), py::arg("m_users"), py::arg("seed") = 0, py::arg("gamma") = 2.2);

  py::class_<netgen::ChannelProcess>(m, "ChannelProcess")
      .def(py::init([](const Array& pathloss, double delta, double sigma, std::uint64_t seed) {
             return netgen::ChannelProcess(to_matrix(pathloss), delta, sigma, seed);
           }),
           py::arg("pathloss"), py::arg("delta"), py::arg("sigma") = 1.0, py::arg("seed") = 0)
      .def("step", &netgen::ChannelProcess::step)
      .def_property_readonly("time", &netgen::ChannelProcess::time)
      .def_property_readonly("gain", [](const netgen::ChannelProcess& c) { return from_matrix(c.gain()); })
      .def_property_readonly("fading_re", [](const netgen::ChannelProcess& c) { return from_matrix(c.fading_re()); })
      .def_property_readonly("fading_im", [](const netgen::ChannelProcess& c) { return from_matrix(c.fading_im()); });

  // aggregation
  m.def("sparsify", [](const Array& gain, double eta0, std::vector<bool> active) {
    return from_matrix(graphflow::sparsify(to_matrix(gain), eta0, active).h_tilde);
  }, py::arg("gain"), py::arg("eta0"), py::arg("active"));
  m.def("aggregate", [](const std::vector<Array>& shifts, const std::vector<Array>& xs, std::size_t K) {
    // Runs the exchange protocol over the whole history; returns y[t] as m x K arrays.
    if (shifts.size() != xs.size()) throw std::invalid_argument("aggregate: need one state per shift");
    if (xs.empty()) return std::vector<Array>{};
    auto st = graphflow::AggregationState::cold(xs.front().size(), K);
    std::vector<Array> out;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      st = graphflow::advance_aggregation(st, graphflow::GraphShift{to_matrix(shifts[t]), 0.0}, to_vector(xs[t]));
      out.push_back(from_matrix(st.y));
    }
    return out;
  }, py::arg("shifts"), py::arg("xs"), py::arg("K"));

  // filters
  py::class_<aggnn::FilterTensor>(m, "FilterTensor")
      .def_property_readonly("layers", [](const aggnn::FilterTensor& A) {
        std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> out;
        for (const auto& l : A.layers()) out.emplace_back(l.in_features, l.out_features, l.taps);
        return out;
      })
      .def_property("flat", [](const aggnn::FilterTensor& A) {
        return from_vector(Vector(A.flat().begin(), A.flat().end()));
      }, [](aggnn::FilterTensor& A, const Array& v) {
        if (static_cast<std::size_t>(v.size()) != A.size()) throw std::invalid_argument("flat: size mismatch");
        std::copy(v.data(), v.data() + v.size(), A.flat().begin());
      })
      .def("__len__", &aggnn::FilterTensor::size)
      .def("evaluate", [](const aggnn::FilterTensor& A, const Array& y) { return aggnn::evaluate(A, to_vector(y)); })
      .def("gradient", [](const aggnn::FilterTensor& A, const Array& y) {
        const auto fr = aggnn::forward(A, to_vector(y));
        const auto g = aggnn::backward(A, fr.acts, 1.0);
        return py::make_tuple(fr.z, from_vector(Vector(g.flat().begin(), g.flat().end())));
      }, "readout and its gradient with respect to every tap")
      .def("save", [](const aggnn::FilterTensor& A, const std::filesystem::path& p) { aggnn::save_filters(A, p); })
      .def("__eq__", [](const aggnn::FilterTensor& a, const aggnn::FilterTensor& b) { return a == b; });
  m.def("uniform_layers", [](std::size_t L, std::size_t F, std::size_t taps) {
    aggnn::FilterTensor A(aggnn::uniform_layers(L, F, taps));
    return A;
  }, "zero filters with L layers of F features and the given taps", py::arg("L"), py::arg("F"), py::arg("taps"));
  m.def("init_filters", [](std::size_t L, std::size_t F, std::size_t taps, double scale, std::uint64_t seed) {
    return aggnn::init_filters(aggnn::uniform_layers(L, F, taps), scale, seed);
  }, py::arg("L") = 10, py::arg("F") = 1, py::arg("taps") = 10, py::arg("scale") = 1.0, py::arg("seed") = 0);
  m.def("init_near_identity",
        [](std::size_t L, std::size_t F, std::size_t taps, double scale, double shrink, std::uint64_t seed) {
          return aggnn::init_near_identity(aggnn::uniform_layers(L, F, taps), scale, shrink, seed);
        },
        py::arg("L") = 10, py::arg("F") = 1, py::arg("taps") = 10, py::arg("scale") = 1.0, py::arg("shrink") = 0.1,
        py::arg("seed") = 0);
  m.def("load_filters", [](const std::filesystem::path& p) { return aggnn::load_filters(p); });

  // policy, rewards, baselines
  m.def("sample_policy", [](const Array& z, double p0, std::uint64_t seed, std::uint64_t t) {
    const auto s = policy::sample(to_vector(z), p0, seed, t);
    return py::make_tuple(from_vector(s.actions), from_vector(s.probs), from_vector(s.score));
  }, py::arg("z"), py::arg("p0"), py::arg("seed"), py::arg("t"));
  m.def("sumrate", [](const Array& p, const Array& gain, double eta0, bool full, double noise) {
    const Matrix g = to_matrix(gain);
    return from_vector(rewards::sumrate(to_vector(p), g, rewards::interference_mask(g, eta0, full), noise));
  }, py::arg("p"), py::arg("gain"), py::arg("eta0") = 0.0, py::arg("full_interference") = false,
        py::arg("noise_floor") = 1.0);
  m.def("wmmse", [](const Array& gain, double cap, std::size_t iters, double noise) {
    const auto r = baselines::wmmse(to_matrix(gain), cap, iters, noise);
    return py::make_tuple(from_vector(r.powers), r.degenerate);
  }, py::arg("gain"), py::arg("p_cap"), py::arg("iters"), py::arg("noise") = 1.0);
  m.def("equal_power", [](std::size_t n, double P_max) { return from_vector(baselines::equal_power(n, P_max)); });
  m.def("random_power", [](std::size_t n, double P_max, double p0, std::uint64_t seed, std::uint64_t t) {
    return from_vector(baselines::random_power(n, P_max, p0, seed, t));
  });

  // experiments; configs are {key: text value} dicts over the CLI's keys
  m.def("config_keys", &ex::ExperimentConfig::keys);
  m.def("default_config", [] { return config_dict(ex::ExperimentConfig{}); });
  m.def("resolve_config", [](const std::map<std::string, std::string>& o) { return config_dict(make_config(o)); },
        "apply overrides to the defaults and validate", py::arg("overrides") = std::map<std::string, std::string>{});
  m.def("load_config", [](const std::filesystem::path& p) { return config_dict(ex::load_config(p)); });

  m.def("train", [](const std::map<std::string, std::string>& o) {
    const auto cfg = make_config(o);
    ex::TrainingRun run;
    {
      py::gil_scoped_release release;
      run = ex::run_training(cfg);
    }
    py::dict d;
    d["filters"] = run.result.A;
    d["final_ma"] = summary_dict(run.final_ma);
    d["tail_power_mean"] = run.tail_power_mean;
    d["P_max"] = cfg.budget();
    d["seconds"] = run.elapsed_seconds;
    d["sumrate"] = from_vector(run.trace.agg);
    d["power"] = from_vector(run.trace.agg_power);
    d["equal"] = from_vector(run.trace.equal);
    d["random"] = from_vector(run.trace.random);
    d["wmmse"] = from_vector(run.trace.wmmse);
    d["topology"] = topology_dict(run.topology);
    return d;
  }, "train a policy with paired baselines", py::arg("overrides") = std::map<std::string, std::string>{});

  m.def("permutation_test", [](const std::map<std::string, std::string>& o, const aggnn::FilterTensor& A,
                               std::size_t trials) {
    std::vector<std::pair<double, double>> out;
    for (const auto& t : ex::permutation_test(make_config(o), A, trials))
      out.emplace_back(t.phi_deviation, t.reward_deviation);
    return out;
  }, "per trial (readout deviation, reward deviation)", py::arg("overrides"), py::arg("filters"), py::arg("trials"));

  m.def("transfer", [](const std::map<std::string, std::string>& o, const aggnn::FilterTensor& A, bool scaled,
                       std::size_t m_prime, std::size_t trials) {
    py::list out;
    for (const auto& t : ex::transfer(make_config(o), A, scaled, m_prime, trials)) out.append(summary_dict(t.rates));
    return out;
  }, py::arg("overrides"), py::arg("filters"), py::arg("scaled"), py::arg("m_prime"), py::arg("trials"));

  m.def("run_command", [](const std::string& name, const std::map<std::string, std::string>& o) -> std::string {
    const auto cfg = make_config(o);
    py::gil_scoped_release release;
    if (name == "train") return ex::cmd_train(cfg);
    if (name == "baseline") return ex::cmd_baseline(cfg);
    if (name == "eval") return ex::cmd_eval(cfg);
    if (name == "transfer") return ex::cmd_transfer(cfg);
    if (name == "sweep") return ex::cmd_sweep(cfg);
    if (name == "permtest") {
      std::string summary;
      ex::cmd_permtest(cfg, &summary);
      return summary;
    }
    throw std::invalid_argument("unknown command: " + name);
  }, "run a CLI command in-process; returns its JSON summary", py::arg("name"), py::arg("overrides"));
}
