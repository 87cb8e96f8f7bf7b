#include "wagnn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wagnn/rng.hpp"

namespace wagnn::baselines {

namespace {

// One sweep of u, w, v updates. A 0/0 amplitude update (no direct gain and
// nothing heard) switches that node off and returns false.
bool wmmse_sweep(const Matrix& g, WmmseState& st, double noise) {
  const std::size_t m = st.v.size();
  const double v_max = std::sqrt(st.p_cap);
  for (std::size_t i = 0; i < m; ++i) {
    double received = noise;
    for (std::size_t j = 0; j < m; ++j) received += g(i, j) * g(i, j) * st.v[j] * st.v[j];
    st.u[i] = g(i, i) * st.v[i] / received;
    st.w[i] = 1.0 / (1.0 - st.u[i] * g(i, i) * st.v[i]);
  }
  bool clean = true;
  for (std::size_t i = 0; i < m; ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j) denom += g(j, i) * g(j, i) * st.u[j] * st.u[j] * st.w[j];
    const double numer = st.w[i] * st.u[i] * g(i, i);
    if (denom == 0.0) {
      if (numer == 0.0) clean = false;
      st.v[i] = numer > 0.0 ? v_max : 0.0;
      continue;
    }
    st.v[i] = std::clamp(numer / denom, 0.0, v_max);
  }
  return clean;
}

}  // namespace

std::vector<Vector> wmmse_iterates(const Matrix& gain, double p_cap, std::size_t iters, double noise,
                                   bool* degenerate_out) {
  bool degenerate = false;
  if (!gain.square()) throw ShapeError("wmmse: gain must be square");
  if (!(p_cap >= 0.0)) throw std::invalid_argument("wmmse: power cap must be nonnegative");
  const std::size_t m = gain.rows();
  WmmseState st{Vector(m, std::sqrt(p_cap)), Vector(m), Vector(m), p_cap};
  std::vector<Vector> out;
  out.reserve(iters + 1);
  const double v_max = std::sqrt(p_cap);
  auto powers = [&] {
    Vector p(m);
    // report the cap itself at full amplitude rather than sqrt(cap)^2
    for (std::size_t i = 0; i < m; ++i) p[i] = st.v[i] == v_max ? p_cap : st.v[i] * st.v[i];
    return p;
  };
  out.push_back(powers());
  for (std::size_t it = 0; it < iters; ++it) {
    if (!wmmse_sweep(gain, st, noise)) degenerate = true;
    out.push_back(powers());
  }
  if (degenerate_out) *degenerate_out = degenerate;
  return out;
}

WmmseResult wmmse(const Matrix& gain, double p_cap, std::size_t iters, double noise) {
  bool degenerate = false;
  auto trace = wmmse_iterates(gain, p_cap, iters, noise, &degenerate);
  return {std::move(trace.back()), degenerate};
}

Matrix threshold_gain(const Matrix& gain, double eta0) {
  Matrix out = gain;
  for (auto& e : out.flat())
    if (e < eta0) e = 0.0;
  return out;
}

Vector equal_power(std::size_t m, double P_max) {
  if (m == 0) throw std::invalid_argument("equal_power: m must be >= 1");
  return Vector(m, P_max / static_cast<double>(m));
}

Vector random_power(std::size_t m, double P_max, double p0, std::uint64_t seed, std::uint64_t t) {
  if (m == 0) throw std::invalid_argument("random_power: m must be >= 1");
  const double prob = P_max / (p0 * static_cast<double>(m));
  if (!(prob >= 0.0) || prob > 1.0 + 1e-12)
    throw std::invalid_argument("invalid config: random full-power probability P_max/(p0 m) must lie in [0, 1]");
  Vector p(m);
  for (std::size_t i = 0; i < m; ++i) {
    rng::Stream stream(seed, rng::Tag::baseline, {t, i});
    p[i] = stream.bernoulli(prob) ? p0 : 0.0;
  }
  return p;
}

}  // namespace wagnn::baselines
