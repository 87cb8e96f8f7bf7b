#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "wagnn/baselines.hpp"
#include "wagnn/rng.hpp"

using namespace wagnn;

namespace {

Matrix two_link(double d1, double d2, double c12, double c21) {
  Matrix g(2, 2);
  g(0, 0) = d1;
  g(1, 1) = d2;
  g(0, 1) = c12;
  g(1, 0) = c21;
  return g;
}

double grid_optimum(const Matrix& g, double cap, int n = 100) {
  double best = 0;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b)
      best = std::max(best, oracle::sum_rate(g, Vector{cap * a / n, cap * b / n}));
  return best;
}

Matrix random_gain(std::size_t m, rng::Stream& s) {
  Matrix g(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) g(i, j) = (i == j ? 1.0 : 0.6) * s.uniform(0.05, 2.0);
  return g;
}

}  // namespace

TEST_CASE("single link goes to full power") {
  for (double g11 : {0.01, 0.5, 3.0}) {
    Matrix g(1, 1, g11);
    const auto res = baselines::wmmse(g, 2.0, 5);
    CHECK(res.powers[0] == doctest::Approx(2.0));
    // 1-D grid oracle: full power is the best point on the grid
    double best_p = 0, best = -1;
    for (int k = 0; k <= 1000; ++k) {
      const double p = 2.0 * k / 1000;
      const double r = oracle::sum_rate(g, Vector{p});
      if (r > best) best = r, best_p = p;
    }
    CHECK(best_p == 2.0);
  }
}

TEST_CASE("zero iterations return the cap") {
  rng::Stream s(1);
  const auto res = baselines::wmmse(random_gain(4, s), 1.5, 0);
  for (double p : res.powers) CHECK(p == 1.5);
  CHECK_FALSE(res.degenerate);
}

TEST_CASE("strong cross gains switch one link down") {
  const auto g = two_link(1.0, 0.7, 3.0, 3.0);
  const auto p = baselines::wmmse(g, 1.0, 200).powers;
  CHECK(std::min(p[0], p[1]) < 0.05);
  const double got = oracle::sum_rate(g, p);
  CHECK(got >= oracle::sum_rate(g, baselines::equal_power(2, 1.0)));
  CHECK(got >= 0.98 * grid_optimum(g, 1.0));
}

TEST_CASE("weak-interference two-link instances reach the grid optimum within 2%") {
  rng::Stream s(2);
  for (int trial = 0; trial < 30; ++trial) {
    const double d1 = s.uniform(0.3, 2.0), d2 = s.uniform(0.3, 2.0);
    const double c = 0.3 * std::min(d1, d2);
    const auto g = two_link(d1, d2, c * s.uniform(), c * s.uniform());
    const auto p = baselines::wmmse(g, 1.0, 200).powers;
    CHECK(oracle::sum_rate(g, p) >= 0.98 * grid_optimum(g, 1.0));
  }
}

TEST_CASE("converged powers satisfy the box optimality conditions") {
  // WMMSE is an ascent method: its limit is a stationary point of the
  // sum-rate on [0, cap]^m, checked here with finite differences.
  rng::Stream s(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_gain(2 + trial % 3, s);
    const auto p = baselines::wmmse(g, 1.0, 2000).powers;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double h = 1e-6;
      Vector up = p, down = p;
      up[i] += h;
      down[i] -= h;
      const double d = (oracle::sum_rate(g, up) - oracle::sum_rate(g, down)) / (2 * h);
      if (p[i] >= 1.0 - 1e-9)
        CHECK(d >= -1e-4);
      else if (p[i] <= 1e-9)
        CHECK(d <= 1e-4);
      else
        CHECK(std::abs(d) <= 1e-4);
    }
  }
}

TEST_CASE("full power can be a local optimum the iterations never leave") {
  // Both links at full power: raising p_1 helps link 1 about as much as it
  // hurts link 2, so the corner is stationary although switching link 1 off
  // is far better.
  const auto g = two_link(2.36221, 7.71644, 5.04729, 16.7676);
  const auto p = baselines::wmmse(g, 1.0, 500).powers;
  CHECK(p == Vector{1.0, 1.0});
  CHECK(oracle::sum_rate(g, p) < 0.2 * grid_optimum(g, 1.0));
}

TEST_CASE("sum-rate never decreases across iterations and caps hold") {
  rng::Stream s(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + trial % 7;
    const auto g = random_gain(m, s);
    const double cap = s.uniform(0.2, 3.0);
    const auto its = baselines::wmmse_iterates(g, cap, 30);
    REQUIRE(its.size() == 31);
    for (std::size_t k = 0; k < its.size(); ++k) {
      for (double p : its[k]) {
        CHECK(p >= 0.0);
        CHECK(p <= cap * (1 + 1e-12));
      }
      if (k > 0) CHECK(oracle::sum_rate(g, its[k]) >= oracle::sum_rate(g, its[k - 1]) - 1e-9);
    }
  }
}

TEST_CASE("all-zero gains are flagged and switched off") {
  const auto res = baselines::wmmse(Matrix(3, 3, 0.0), 1.0, 2);
  CHECK(res.degenerate);
  for (double p : res.powers) CHECK(p == 0.0);
}

TEST_CASE("thresholded view of the channel") {
  const auto g = baselines::threshold_gain(two_link(1.0, 0.5, 0.05, 0.2), 0.1);
  CHECK(g(0, 1) == 0.0);
  CHECK(g(1, 0) == 0.2);
  CHECK(g(1, 1) == 0.5);
}

TEST_CASE("equal power") {
  for (double p : baselines::equal_power(25, 25.0)) CHECK(p == 1.0);
  CHECK(baselines::equal_power(1, 3.5) == Vector{3.5});
  double sum = 0;
  for (double p : baselines::equal_power(7, 3.0)) sum += p;
  CHECK(sum == doctest::Approx(3.0));
  CHECK_THROWS(baselines::equal_power(0, 1.0));
}

TEST_CASE("random power") {
  for (double p : baselines::random_power(10, 20.0, 2.0, 1, 0)) CHECK(p == 2.0);
  for (double p : baselines::random_power(10, 0.0, 2.0, 1, 0)) CHECK(p == 0.0);
  CHECK_THROWS_AS(baselines::random_power(10, 21.0, 2.0, 1, 0), std::invalid_argument);
  double total = 0;
  const int draws = 100000;
  for (int t = 0; t < draws / 10; ++t)
    for (double p : baselines::random_power(10, 4.0, 1.0, 5, static_cast<std::uint64_t>(t))) total += p;
  // 10^5 per-node draws, expected total per slot 4
  CHECK(total / (draws / 10) == doctest::Approx(4.0).epsilon(0.02));
}
