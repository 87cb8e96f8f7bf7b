#include "wagnn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wagnn/rng.hpp"

namespace wagnn::policy {

double sigmoid(double z) {
  const double c = std::clamp(z, -kZClamp, kZClamp);
  return 1.0 / (1.0 + std::exp(-c));
}

double bernoulli_score(double prob, bool transmit) { return transmit ? 1.0 - prob : -prob; }

PolicySample sample(std::span<const double> z, double p0, std::uint64_t seed, std::uint64_t t) {
  if (!(p0 > 0.0)) throw std::invalid_argument("transmit power p0 must be positive");
  const std::size_t m = z.size();
  PolicySample out{Vector(m), Vector(m), p0, Vector(m)};
  for (std::size_t i = 0; i < m; ++i) {
    const double pi = sigmoid(z[i]);
    rng::Stream stream(seed, rng::Tag::policy, {t, i});
    const bool transmit = stream.bernoulli(pi);
    out.probs[i] = pi;
    out.actions[i] = transmit ? p0 : 0.0;
    out.score[i] = bernoulli_score(pi, transmit);
  }
  return out;
}

Vector threshold_actions(std::span<const double> z, double p0) {
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = sigmoid(z[i]) >= 0.5 ? p0 : 0.0;
  return out;
}

LogProbGradient log_prob_grad_chain(const PolicySample& sample, std::span<const aggnn::FilterTensor> dz_dA) {
  if (dz_dA.size() != sample.score.size()) throw ShapeError("log_prob_grad_chain: node count mismatch");
  if (dz_dA.empty()) throw ShapeError("log_prob_grad_chain: no nodes");
  LogProbGradient out{dz_dA.front().zeros_like(), {}};
  out.per_node.reserve(dz_dA.size());
  for (std::size_t i = 0; i < dz_dA.size(); ++i) {
    auto term = dz_dA[i];
    term.scale(sample.score[i]);
    out.total.add_scaled(term, 1.0);
    out.per_node.push_back(std::move(term));
  }
  return out;
}

}  // namespace wagnn::policy
