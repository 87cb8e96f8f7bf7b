#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "wagnn/policy.hpp"

using namespace wagnn;

TEST_CASE("z = 0 transmits half the time") {
  const Vector z(1000, 0.0);
  double on = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto s = policy::sample(z, 1.0, 3, t);
    for (std::size_t i = 0; i < z.size(); ++i) {
      REQUIRE(s.probs[i] == 0.5);
      on += s.actions[i];
    }
  }
  CHECK(on / 1e5 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("saturated readouts") {
  const auto s = policy::sample(Vector{1e6, -1e6}, 2.0, 1, 0);
  CHECK(s.actions[0] == 2.0);
  CHECK(s.actions[1] == 0.0);
  CHECK(s.probs[0] < 1.0);
  CHECK(s.probs[1] > 0.0);
  CHECK(std::abs(s.score[0]) < 1e-12);
  CHECK(std::abs(s.score[1]) < 1e-12);
}

TEST_CASE("bernoulli score values") {
  CHECK(policy::bernoulli_score(0.5, true) == 0.5);
  CHECK(policy::bernoulli_score(0.5, false) == -0.5);
}

TEST_CASE("actions take only the two power levels and scores match them") {
  Vector z{-2, -0.5, 0, 0.7, 3};
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto s = policy::sample(z, 1.5, 9, t);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const bool on = s.actions[i] == 1.5;
      REQUIRE((on || s.actions[i] == 0.0));
      CHECK(s.score[i] == doctest::Approx(on ? 1 - s.probs[i] : -s.probs[i]));
    }
  }
  CHECK_THROWS(policy::sample(z, 0.0, 1, 0));
}

TEST_CASE("score has zero mean under the policy") {
  const Vector z(1, 0.8);
  double sum = 0, sum2 = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const double sc = policy::sample(z, 1.0, 77, static_cast<std::uint64_t>(t)).score[0];
    sum += sc;
    sum2 += sc * sc;
  }
  const double mean = sum / n;
  const double stderr_ = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean) <= 3 * stderr_);
}

TEST_CASE("thresholded actions") {
  CHECK(policy::threshold_actions(Vector{-0.1, 0.0, 0.1}, 2.0) == Vector{0.0, 2.0, 2.0});
}

TEST_CASE("log-probability chain") {
  const auto A = aggnn::init_near_identity(aggnn::uniform_layers(3, 1, 3), 1.0, 0.3, 2);
  const Vector y{1.0, 0.4, 0.2};
  const auto fr = aggnn::forward(A, y);
  const auto dz = aggnn::backward(A, fr.acts, 1.0);

  SUBCASE("zero scores give zero") {
    policy::PolicySample s{{0.5, 0.5}, {0, 0}, 1.0, {0.0, 0.0}};
    const std::vector<aggnn::FilterTensor> grads{dz, dz};
    CHECK(policy::log_prob_grad_chain(s, grads).total.norm() == 0.0);
  }
  SUBCASE("opposite scores cancel") {
    policy::PolicySample s{{0.5, 0.5}, {1, 0}, 1.0, {0.5, -0.5}};
    const std::vector<aggnn::FilterTensor> grads{dz, dz};
    CHECK(policy::log_prob_grad_chain(s, grads).total.norm() == doctest::Approx(0.0));
  }
  SUBCASE("single node matches finite differences of log psi") {
    for (bool transmit : {true, false}) {
      const double pi = policy::sigmoid(fr.z);
      policy::PolicySample s{{pi}, {transmit ? 1.0 : 0.0}, 1.0, {policy::bernoulli_score(pi, transmit)}};
      const std::vector<aggnn::FilterTensor> grads{dz};
      const auto g = policy::log_prob_grad_chain(s, grads);
      const auto fd = oracle::fd_gradient(
          A, [&](const aggnn::FilterTensor& B) { return oracle::log_sigmoid_prob(oracle::forward(B, y), transmit); });
      for (std::size_t p = 0; p < A.size(); ++p)
        CHECK(oracle::rel_error(g.total.flat()[p], fd.flat()[p], 1e-6) <= 1e-4);
      CHECK(g.per_node.size() == 1);
    }
  }
  SUBCASE("mismatched node count") {
    policy::PolicySample s{{0.5, 0.5}, {1, 0}, 1.0, {0.5, -0.5}};
    const std::vector<aggnn::FilterTensor> grads{dz};
    CHECK_THROWS(policy::log_prob_grad_chain(s, grads));
  }
}

TEST_CASE("likelihood-ratio estimate of d/dA E[c 1{on}]") {
  const auto A = aggnn::init_near_identity(aggnn::uniform_layers(2, 1, 2), 1.0, 0.5, 6);
  const Vector y{0.8, 0.3};
  const double c = 2.0;
  const auto fr = aggnn::forward(A, y);
  const auto dz = aggnn::backward(A, fr.acts, 1.0);
  const auto fd = oracle::fd_gradient(A, [&](const aggnn::FilterTensor& B) {
    return c / (1.0 + std::exp(-oracle::forward(B, y)));
  });
  const int n = 100000;
  // estimate per coordinate: c 1{on} score dz/dA
  Vector sum(A.size(), 0.0), sum2(A.size(), 0.0);
  for (int t = 0; t < n; ++t) {
    const auto s = policy::sample(Vector{fr.z}, 1.0, 5, static_cast<std::uint64_t>(t));
    const double w = (s.actions[0] > 0 ? c : 0.0) * s.score[0];
    for (std::size_t p = 0; p < A.size(); ++p) {
      const double e = w * dz.flat()[p];
      sum[p] += e;
      sum2[p] += e * e;
    }
  }
  for (std::size_t p = 0; p < A.size(); ++p) {
    const double mean = sum[p] / n;
    const double se = std::sqrt(std::max(sum2[p] / n - mean * mean, 0.0) / n);
    CHECK(std::abs(mean - fd.flat()[p]) <= 3 * se + 1e-9);
  }
}
