#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "wagnn/rewards.hpp"
#include "wagnn/rng.hpp"

using namespace wagnn;

namespace {

Matrix all_ones(std::size_t m) { return Matrix(m, m, 1.0); }

}  // namespace

TEST_CASE("single link Shannon rate") {
  Matrix g(1, 1, 1.0);
  CHECK(rewards::sumrate(Vector{1.0}, g, all_ones(1))[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("silence gives zero rates") {
  Matrix g(3, 3, 0.7);
  for (double r : rewards::sumrate(Vector(3, 0.0), g, all_ones(3))) CHECK(r == 0.0);
}

TEST_CASE("two-link rates by hand") {
  Matrix g(2, 2);
  g(0, 0) = g(1, 1) = 1.0;
  g(0, 1) = g(1, 0) = 0.5;
  const auto r = rewards::sumrate(Vector{1, 1}, g, all_ones(2));
  CHECK(r[0] == doctest::Approx(std::log(1.8)));
  CHECK(r[1] == doctest::Approx(std::log(1.0 + 1.0 / 1.25)));
}

TEST_CASE("rates match the oracle with full interference") {
  rng::Stream s(4);
  Matrix g(5, 5);
  for (auto& v : g.flat()) v = s.uniform();
  Vector p(5);
  for (auto& v : p) v = s.uniform(0, 3);
  const auto r = rewards::sumrate(p, g, rewards::interference_mask(g, 0.0, true), 0.5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(r[i] == doctest::Approx(oracle::rate(g, p, i, 0.5)).epsilon(1e-12));
}

TEST_CASE("threshold mask drops weak interferers") {
  Matrix g(2, 2);
  g(0, 0) = g(1, 1) = 1.0;
  g(0, 1) = 0.05;
  g(1, 0) = 0.5;
  const auto mask = rewards::interference_mask(g, 0.1);
  CHECK(mask(0, 1) == 0.0);
  CHECK(mask(1, 0) == 1.0);
  const auto r = rewards::sumrate(Vector{1, 1}, g, mask);
  CHECK(r[0] == doctest::Approx(std::log(2.0)));
  CHECK(rewards::interference_mask(g, 0.1, true)(0, 1) == 1.0);
}

TEST_CASE("demand reward") {
  rng::Stream s(6);
  Matrix g(3, 3);
  for (auto& v : g.flat()) v = s.uniform();
  const Vector p{1, 0, 1};
  const auto mask = all_ones(3);
  const auto rate = rewards::sumrate(p, g, mask);
  CHECK(rewards::demand_reward(p, g, Vector(3, 0.0), mask) == rate);
  const auto f = rewards::demand_reward(p, g, rate, mask);
  for (double v : f) CHECK(v == 0.0);
  const Vector x{0.3, 1.0, 2.0};
  const auto d = rewards::demand_reward(p, g, x, mask);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d[i] == doctest::Approx(rate[i] - x[i]));
  CHECK_THROWS(rewards::demand_reward(p, g, Vector{1}, mask));
}

TEST_CASE("observe picks the configured reward") {
  Matrix g(2, 2, 0.5);
  rewards::RewardConfig cfg;
  cfg.P_max = 1;
  const Vector p{1, 1}, x{0.1, 0.2};
  CHECK(rewards::observe(cfg, p, g, x) == rewards::sumrate(p, g, all_ones(2)));
  cfg.kind = rewards::RewardKind::demand;
  CHECK(rewards::observe(cfg, p, g, x) == rewards::demand_reward(p, g, x, all_ones(2)));
}

TEST_CASE("utility and slack") {
  CHECK(rewards::utility_u0(Vector(4, 0.0)) == 0.0);
  CHECK(rewards::utility_u0(Vector{1, 2, 3}) == 6.0);
  CHECK(rewards::utility_u0(Vector{3, 1, 2}) == 6.0);
  CHECK(rewards::power_slack(Vector(3, 0.0), 2.5) == 2.5);
  CHECK(rewards::power_slack(Vector{1, 1.5}, 2.5) == 0.0);
  Vector p(25, 0.0);
  std::fill(p.begin(), p.begin() + 13, 1.0);
  CHECK(rewards::power_slack(p, 12.5) == doctest::Approx(-0.5));
}

TEST_CASE("reward config validation") {
  rewards::RewardConfig cfg;
  CHECK_NOTHROW(cfg.validate(25));
  cfg.P_max = 30;
  CHECK_THROWS(cfg.validate(25));
  cfg.P_max = 10;
  cfg.noise_floor = 0;
  CHECK_THROWS(cfg.validate(25));
}

TEST_CASE("rates are permutation equivariant") {
  rng::Stream s(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 6;
    Matrix g(m, m);
    for (auto& v : g.flat()) v = s.uniform();
    Vector p(m);
    for (auto& v : p) v = s.bernoulli(0.5) ? 1.0 : 0.0;
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), s);
    const auto mask = rewards::interference_mask(g, 0.2);
    const auto r = rewards::sumrate(p, g, mask);
    const auto rp = rewards::sumrate(permute(p, perm), permute(g, perm), permute(mask, perm));
    for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(rp[i] - r[perm[i]]) <= 1e-12);
  }
}

TEST_CASE("more interference never helps and rates stay nonnegative") {
  rng::Stream s(13);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix g(4, 4);
    for (auto& v : g.flat()) v = s.uniform();
    Vector p(4);
    for (auto& v : p) v = s.uniform(0, 2);
    const auto base = rewards::sumrate(p, g, all_ones(4));
    for (double r : base) CHECK(r >= 0.0);
    Vector louder = p;
    louder[2] += 1.0;
    const auto after = rewards::sumrate(louder, g, all_ones(4));
    for (std::size_t i = 0; i < 4; ++i)
      if (i != 2) CHECK(after[i] <= base[i]);
  }
}
