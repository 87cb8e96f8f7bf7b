#include "wagnn/rewards.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wagnn::rewards {

void RewardConfig::validate(std::size_t m) const {
  if (!(noise_floor > 0.0)) throw std::invalid_argument("noise_floor must be positive");
  if (!(eta0 >= 0.0)) throw std::invalid_argument("eta0 must be nonnegative");
  if (!(p0 > 0.0)) throw std::invalid_argument("p0 must be positive");
  if (!(P_max > 0.0)) throw std::invalid_argument("P_max must be positive");
  if (P_max > static_cast<double>(m) * p0 * (1.0 + 1e-12))
    throw std::invalid_argument("P_max exceeds m * p0 = " + std::to_string(static_cast<double>(m) * p0));
}

Matrix interference_mask(const Matrix& gain, double eta0, bool full) {
  Matrix mask(gain.rows(), gain.cols());
  for (std::size_t i = 0; i < gain.rows(); ++i)
    for (std::size_t j = 0; j < gain.cols(); ++j) mask(i, j) = (full || gain(i, j) >= eta0) ? 1.0 : 0.0;
  return mask;
}

Vector sumrate(std::span<const double> p, const Matrix& gain, const Matrix& neighbors, double noise_floor) {
  const std::size_t m = p.size();
  if (gain.rows() != m || gain.cols() != m) throw ShapeError("sumrate: gain size mismatch");
  if (neighbors.rows() != m || neighbors.cols() != m) throw ShapeError("sumrate: neighbor mask size mismatch");
  Vector rate(m);
  for (std::size_t i = 0; i < m; ++i) {
    double interference = noise_floor;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || neighbors(i, j) == 0.0 || p[j] == 0.0) continue;
      interference += gain(i, j) * gain(i, j) * p[j];
    }
    rate[i] = std::log1p(gain(i, i) * gain(i, i) * p[i] / interference);
  }
  return rate;
}

Vector demand_reward(std::span<const double> p, const Matrix& gain, std::span<const double> x, const Matrix& neighbors,
                     double noise_floor) {
  if (x.size() != p.size()) throw ShapeError("demand_reward: demand size mismatch");
  Vector f = sumrate(p, gain, neighbors, noise_floor);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] -= x[i];
  return f;
}

Vector observe(const RewardConfig& cfg, std::span<const double> p, const Matrix& gain, std::span<const double> x) {
  const Matrix mask = interference_mask(gain, cfg.eta0, cfg.full_interference);
  if (cfg.kind == RewardKind::demand) return demand_reward(p, gain, x, mask, cfg.noise_floor);
  return sumrate(p, gain, mask, cfg.noise_floor);
}

double utility_u0(std::span<const double> r) { return std::accumulate(r.begin(), r.end(), 0.0); }

double power_slack(std::span<const double> p, double P_max) {
  return P_max - std::accumulate(p.begin(), p.end(), 0.0);
}

}  // namespace wagnn::rewards
