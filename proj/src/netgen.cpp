#include "wagnn/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "wagnn/rng.hpp"

namespace wagnn::netgen {

namespace {

using json = nlohmann::json;

constexpr double kMinSeparation = 1e-9;

Matrix compute_pathloss(const std::vector<Point>& tx, const std::vector<Point>& rx,
                        const std::vector<std::size_t>& pairing, double gamma) {
  const std::size_t m = tx.size();
  Matrix out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const Point receiver = rx[pairing[i]];
    for (std::size_t j = 0; j < m; ++j) {
      const double d = distance(tx[j], receiver);
      if (!(d >= kMinSeparation)) {
        throw std::invalid_argument("coincident transmitter " + std::to_string(j) + " and receiver " +
                                    std::to_string(pairing[i]));
      }
      out(i, j) = std::pow(d, -gamma);
    }
  }
  return out;
}

bool clear_of(Point p, const std::vector<Point>& others) {
  return std::all_of(others.begin(), others.end(),
                     [&](Point q) { return distance(p, q) >= kMinSeparation; });
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

AdhocGeometry AdhocGeometry::standard(std::size_t m) {
  const double md = static_cast<double>(m);
  return {md, md / 4.0};
}

AdhocGeometry AdhocGeometry::scaled(std::size_t m, std::size_t m_prime) {
  const double md = static_cast<double>(m);
  return {std::sqrt(md * static_cast<double>(m_prime)), md / 4.0};
}

NetworkTopology make_topology(std::vector<Point> tx_pos, std::vector<Point> rx_pos,
                              std::vector<std::size_t> pairing, double gamma, std::uint64_t seed) {
  if (tx_pos.empty()) throw std::invalid_argument("topology needs at least one transmitter");
  if (pairing.size() != tx_pos.size()) throw std::invalid_argument("pairing must cover every transmitter");
  if (!(gamma > 0.0)) throw std::invalid_argument("pathloss exponent must be positive");
  for (auto r : pairing)
    if (r >= rx_pos.size()) throw std::invalid_argument("pairing refers to a missing receiver");

  NetworkTopology topo;
  topo.m = tx_pos.size();
  topo.n = rx_pos.size();
  topo.gamma = gamma;
  topo.seed = seed;
  topo.pathloss = compute_pathloss(tx_pos, rx_pos, pairing, gamma);
  topo.tx_pos = std::move(tx_pos);
  topo.rx_pos = std::move(rx_pos);
  topo.pairing = std::move(pairing);
  return topo;
}

NetworkTopology generate_adhoc(std::size_t m, double gamma, std::uint64_t seed) {
  return generate_adhoc(m, gamma, seed, AdhocGeometry::standard(m));
}

NetworkTopology generate_adhoc(std::size_t m, double gamma, std::uint64_t seed, AdhocGeometry geometry) {
  if (m == 0) throw std::invalid_argument("invalid size: ad-hoc network needs m >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("pathloss exponent must be positive");

  rng::Stream stream(seed, rng::Tag::topology);
  std::vector<Point> tx(m);
  std::vector<Point> rx(m);
  const double w = geometry.half_width;
  for (auto& a : tx) a = {stream.uniform(-w, w), stream.uniform(-w, w)};
  const double off = geometry.rx_offset;
  for (std::size_t i = 0; i < m; ++i) {
    // Resample until the receiver sits apart from every transmitter.
    do {
      rx[i] = {stream.uniform(tx[i].x - off, tx[i].x + off), stream.uniform(tx[i].y - off, tx[i].y + off)};
    } while (!clear_of(rx[i], tx));
  }
  std::vector<std::size_t> pairing(m);
  for (std::size_t i = 0; i < m; ++i) pairing[i] = i;
  return make_topology(std::move(tx), std::move(rx), std::move(pairing), gamma, seed);
}

NetworkTopology make_cellular(std::vector<Point> users, std::vector<Point> base_stations, double gamma,
                              std::uint64_t seed) {
  if (base_stations.empty()) throw std::invalid_argument("invalid size: need at least one base station");
  std::vector<std::size_t> pairing(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < base_stations.size(); ++b) {
      const double d = distance(users[i], base_stations[b]);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    pairing[i] = best;
  }
  return make_topology(std::move(users), std::move(base_stations), std::move(pairing), gamma, seed);
}

NetworkTopology generate_cellular(std::size_t n_bs, std::size_t m_users, std::uint64_t seed, double gamma) {
  if (n_bs == 0) throw std::invalid_argument("invalid size: need at least one base station");
  if (m_users < n_bs) throw std::invalid_argument("invalid size: fewer users than base stations");

  const double half = static_cast<double>(m_users);
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_bs))));
  const std::size_t rows = (n_bs + cols - 1) / cols;
  const double cell_w = 2.0 * half / static_cast<double>(cols);
  const double cell_h = 2.0 * half / static_cast<double>(rows);

  std::vector<Point> bs(n_bs);
  for (std::size_t b = 0; b < n_bs; ++b) {
    const double cx = -half + (static_cast<double>(b % cols) + 0.5) * cell_w;
    const double cy = -half + (static_cast<double>(b / cols) + 0.5) * cell_h;
    bs[b] = {cx, cy};
  }

  // A grid cell lies inside its station's Voronoi region even when some grid
  // slots are empty, so users dropped there are served by that station.
  rng::Stream stream(seed, rng::Tag::topology);
  std::vector<Point> users;
  users.reserve(m_users);
  const std::size_t base = m_users / n_bs;
  const std::size_t extra = m_users % n_bs;
  for (std::size_t b = 0; b < n_bs; ++b) {
    const std::size_t quota = base + (b < extra ? 1 : 0);
    for (std::size_t q = 0; q < quota; ++q) {
      Point u;
      do {
        u = {stream.uniform(bs[b].x - cell_w / 2, bs[b].x + cell_w / 2),
             stream.uniform(bs[b].y - cell_h / 2, bs[b].y + cell_h / 2)};
      } while (!clear_of(u, bs));
      users.push_back(u);
    }
  }
  return make_cellular(std::move(users), std::move(bs), gamma, seed);
}

std::string to_json(const NetworkTopology& topo) {
  auto points = [](const std::vector<Point>& ps) {
    json arr = json::array();
    for (const auto& p : ps) arr.push_back({p.x, p.y});
    return arr;
  };
  json doc;
  doc["gamma"] = topo.gamma;
  doc["seed"] = topo.seed;
  doc["tx_pos"] = points(topo.tx_pos);
  doc["rx_pos"] = points(topo.rx_pos);
  doc["pairing"] = topo.pairing;
  return doc.dump(2);
}

NetworkTopology from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("topology JSON: ") + e.what());
  }
  auto points = [](const json& arr) {
    std::vector<Point> out;
    for (const auto& p : arr) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return out;
  };
  try {
    return make_topology(points(doc.at("tx_pos")), points(doc.at("rx_pos")),
                         doc.at("pairing").get<std::vector<std::size_t>>(), doc.at("gamma").get<double>(),
                         doc.value("seed", std::uint64_t{0}));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("topology JSON: ") + e.what());
  }
}

void save_topology(const NetworkTopology& topo, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(topo) << '\n';
}

NetworkTopology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------
// ChannelProcess

ChannelProcess::ChannelProcess(Matrix pathloss, double delta, double sigma, std::uint64_t seed)
    : pathloss_(std::move(pathloss)), delta_(delta), sigma_(sigma), seed_(seed) {
  if (!pathloss_.square()) throw ShapeError("pathloss must be square");
  if (!(delta_ >= 0.0 && delta_ <= 1.0)) throw std::invalid_argument("innovation factor delta must lie in [0, 1]");
  if (!(sigma_ > 0.0)) throw std::invalid_argument("fading sigma must be positive");
  const std::size_t m = pathloss_.rows();
  fading_re_ = Matrix(m, m);
  fading_im_ = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      rng::Stream s(seed_, rng::Tag::fading, {0, i, j});
      const auto [re, im] = s.normal_pair();
      fading_re_(i, j) = sigma_ * re;
      fading_im_(i, j) = sigma_ * im;
    }
  refresh_gain();
}

void ChannelProcess::step() {
  ++t_;
  if (delta_ > 0.0) {
    const double keep = std::sqrt(1.0 - delta_);
    const double fresh = std::sqrt(delta_) * sigma_;
    const std::size_t m = size();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        rng::Stream s(seed_, rng::Tag::fading, {t_, i, j});
        const auto [re, im] = s.normal_pair();
        fading_re_(i, j) = keep * fading_re_(i, j) + fresh * re;
        fading_im_(i, j) = keep * fading_im_(i, j) + fresh * im;
      }
  }
  refresh_gain();
}

void ChannelProcess::refresh_gain() {
  const std::size_t m = size();
  gain_ = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      gain_(i, j) = pathloss_(i, j) * std::hypot(fading_re_(i, j), fading_im_(i, j));
}

ChannelProcess step_fading(ChannelProcess cp) {
  cp.step();
  return cp;
}

// ---------------------------------------------------------------------------
// NodeStateProcess

NodeStateProcess::NodeStateProcess(std::size_t m, NodeStateMode mode, double demand_rate, std::uint64_t seed)
    : mode_(mode), demand_rate_(demand_rate), seed_(seed), x_(m, 1.0) {
  if (mode_ == NodeStateMode::demand_poisson) {
    if (!(demand_rate_ >= 0.0)) throw std::invalid_argument("invalid parameter: negative demand rate");
    t_ = 0;
    for (std::size_t i = 0; i < m; ++i) {
      rng::Stream s(seed_, rng::Tag::demand, {t_, i});
      x_[i] = static_cast<double>(s.poisson(demand_rate_));
    }
  }
}

void NodeStateProcess::step() {
  ++t_;
  if (mode_ == NodeStateMode::constant_one) {
    std::fill(x_.begin(), x_.end(), 1.0);
    return;
  }
  for (std::size_t i = 0; i < x_.size(); ++i) {
    rng::Stream s(seed_, rng::Tag::demand, {t_, i});
    x_[i] = static_cast<double>(s.poisson(demand_rate_));
  }
}

NodeStateProcess step_node_state(NodeStateProcess ns) {
  ns.step();
  return ns;
}

}  // namespace wagnn::netgen
