#pragma once

// Network topologies and the random channel / node-state processes that
// drive every experiment.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "wagnn/linalg.hpp"

namespace wagnn::netgen {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

/// Transmitters, receivers, the pairing i -> r(i) and the static pathloss.
///
/// Row i of `pathloss` describes what receiver r(i) hears:
/// pathloss(i, j) = |tx_j - rx_{r(i)}|^-gamma, so pathloss(i, i) is the
/// direct link of pair i and off-diagonal entries are interference.
struct NetworkTopology {
  std::size_t m = 0;  // transmitters
  std::size_t n = 0;  // receivers (base stations in the cellular layout)
  std::vector<Point> tx_pos;
  std::vector<Point> rx_pos;
  std::vector<std::size_t> pairing;
  double gamma = 2.2;
  std::uint64_t seed = 0;
  Matrix pathloss;
};

/// Placement box for ad-hoc drops: tx uniform in [-half_width, half_width]^2,
/// rx uniform in the +-rx_offset box around its transmitter.
struct AdhocGeometry {
  double half_width = 0.0;
  double rx_offset = 0.0;

  /// The training layout for m pairs: [-m, m]^2 with offset m/4.
  static AdhocGeometry standard(std::size_t m);
  /// Equal-density layout of m_prime pairs for a policy trained on m pairs.
  static AdhocGeometry scaled(std::size_t m, std::size_t m_prime);
};

NetworkTopology generate_adhoc(std::size_t m, double gamma, std::uint64_t seed);
NetworkTopology generate_adhoc(std::size_t m, double gamma, std::uint64_t seed, AdhocGeometry geometry);

/// Builds a topology from explicit positions; `pairing[i]` indexes rx_pos.
NetworkTopology make_topology(std::vector<Point> tx_pos, std::vector<Point> rx_pos,
                              std::vector<std::size_t> pairing, double gamma, std::uint64_t seed = 0);

/// Users on the given positions, each served by its nearest base station.
NetworkTopology make_cellular(std::vector<Point> users, std::vector<Point> base_stations, double gamma,
                              std::uint64_t seed = 0);

/// n_bs base stations on a regular grid over [-m, m]^2 (m = m_users); users
/// are dropped inside their serving station's grid cell, m_users / n_bs per
/// cell with the remainder going to the lowest-index cells.
NetworkTopology generate_cellular(std::size_t n_bs, std::size_t m_users, std::uint64_t seed, double gamma = 2.2);

std::string to_json(const NetworkTopology& topo);
NetworkTopology from_json(const std::string& text);
void save_topology(const NetworkTopology& topo, const std::filesystem::path& path);
NetworkTopology load_topology(const std::filesystem::path& path);

/// Correlated Rayleigh fading on top of a fixed pathloss matrix:
/// h(t+1) = sqrt(1 - delta) h(t) + sqrt(delta) w(t+1), w complex normal
/// with per-part variance sigma^2.
class ChannelProcess {
 public:
  ChannelProcess(Matrix pathloss, double delta, double sigma, std::uint64_t seed);

  /// Advances the fading one step and recomputes the gain matrix.
  void step();

  std::size_t size() const { return pathloss_.rows(); }
  double delta() const { return delta_; }
  double sigma() const { return sigma_; }
  std::uint64_t time() const { return t_; }

  const Matrix& pathloss() const { return pathloss_; }
  const Matrix& fading_re() const { return fading_re_; }
  const Matrix& fading_im() const { return fading_im_; }
  /// gain(i, j) = pathloss(i, j) * |h^f_ij|, the |h_ij| entering rewards and the GSO.
  const Matrix& gain() const { return gain_; }

 private:
  void refresh_gain();

  Matrix pathloss_;
  double delta_;
  double sigma_;
  std::uint64_t seed_;
  std::uint64_t t_ = 0;
  Matrix fading_re_;
  Matrix fading_im_;
  Matrix gain_;
};

/// Functional form of ChannelProcess::step.
ChannelProcess step_fading(ChannelProcess cp);

enum class NodeStateMode { constant_one, demand_poisson };

class NodeStateProcess {
 public:
  NodeStateProcess(std::size_t m, NodeStateMode mode, double demand_rate = 0.0, std::uint64_t seed = 0);

  /// Draws x(t+1).
  void step();

  const Vector& x() const { return x_; }
  NodeStateMode mode() const { return mode_; }
  double demand_rate() const { return demand_rate_; }

 private:
  NodeStateMode mode_;
  double demand_rate_;
  std::uint64_t seed_;
  std::uint64_t t_ = 0;
  Vector x_;
};

NodeStateProcess step_node_state(NodeStateProcess ns);

}  // namespace wagnn::netgen
