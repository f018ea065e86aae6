#include <doctest.h>

#include "cpd/seq.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cpd;
using seq::RealSequence;

namespace {

std::vector<double> test_grid() {
  std::vector<double> xs;
  for (int k = 0; k <= 40; ++k) xs.push_back(-3.0 + 0.15 * k);
  // the grid misses 1; add it and both sides of each evaluation branch
  for (double x : {1.0, 1.0 + 5e-5, 1.0 - 5e-5, 1.0 + 2e-4, 1.0 - 2e-4, 0.74, 0.76,
                   1.24, 1.26}) {
    xs.push_back(x);
  }
  return xs;
}

double rel_gap(double a, long double b) {
  return static_cast<double>(std::abs(a - b) / std::max(1.0L, std::abs(b)));
}

RealSequence power_rule(double sign, double p, std::size_t n) {
  return RealSequence::from_rule(
      [&](std::size_t i) { return sign * std::pow(static_cast<double>(i), p); }, n);
}

}  // namespace

TEST_CASE("q_poly matches the long double finite sum") {
  for (double x : test_grid()) {
    for (std::size_t n = 0; n <= 31; ++n) {
      CHECK(rel_gap(seq::q_poly(n, x), oracle::q_sum(n, x)) <= 1e-13);
    }
  }
}

TEST_CASE("q_poly at 1 is n(n-1)/2") {
  for (std::size_t n = 0; n <= 40; ++n) {
    CHECK(seq::q_poly(n, 1.0) == (n < 2 ? 0.0 : n * (n - 1) / 2.0));
  }
}

TEST_CASE("Q_n identities on the grid") {
  for (double x : test_grid()) {
    for (std::size_t n = 0; n <= 30; ++n) {
      const double q0 = seq::q_poly(n, x);
      const double q1 = seq::q_poly(n + 1, x);
      const double q2 = seq::q_poly(n + 2, x);
      const double xn = std::pow(x, static_cast<double>(n));
      const double nn = static_cast<double>(n);
      // Q_{n+1} = x Q_n + n
      CHECK(std::abs(q1 - (x * q0 + nn)) <= 1e-12 * std::max(1.0, std::abs(x * q0) + nn));
      // (x-1)^2 Q_n = x^n - 1 - n(x-1)
      if (x != 1.0) {
        const double d = x - 1.0;
        CHECK(std::abs(d * d * q0 - (xn - 1.0 - nn * d)) <=
              1e-12 * std::max(1.0, std::abs(xn) + 1.0 + nn * std::abs(d)));
      }
      // Delta Q_n = sum_{j<n} x^j
      double geo = 0.0;
      for (std::size_t j = 0; j < n; ++j) geo += std::pow(x, static_cast<double>(j));
      CHECK(std::abs((q1 - q0) - geo) <= 1e-12 * std::max(1.0, std::abs(q1) + std::abs(q0)));
      // Delta^2 Q_n = x^n
      CHECK(std::abs((q2 - 2.0 * q1 + q0) - xn) <=
            1e-12 * std::max(1.0, std::abs(q2) + 2.0 * std::abs(q1) + std::abs(q0)));
      if (x >= 0.0 && x <= 1.0 && n >= 1) {
        CHECK(q0 / nn <= q1 / (nn + 1.0) + 1e-12 * std::max(1.0, q1));
      }
    }
  }
}

TEST_CASE("difference basis carries Hankel(gamma) to Hankel(Delta^2 gamma)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (std::size_t len : {5u, 8u, 13u, 25u}) {
    std::vector<double> v(len);
    for (double& x : v) x = u(rng);
    const RealSequence s(v);
    const RMatrix h = seq::hankel(s, 0);
    const RMatrix h2 = seq::hankel(seq::difference(s, 2), 0);
    const Eigen::Index m = h2.rows();
    REQUIRE(h.rows() >= m + 1);
    RMatrix b = RMatrix::Zero(m + 1, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      b(i, i) = 1.0;
      b(i + 1, i) = -1.0;
    }
    const RMatrix lhs = b.transpose() * h.topLeftCorner(m + 1, m + 1) * b;
    CHECK((lhs - h2).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("power sequences at N = 12") {
  const ToleranceConfig cfg;
  CHECK(seq::is_cpd_truncated(power_rule(1.0, 2.0, 12), cfg).holds());
  for (auto [sign, p] : {std::pair{1.0, 3.0}, {1.0, 4.0}, {-1.0, 2.0}}) {
    const RealSequence s = power_rule(sign, p, 12);
    const Verdict v = seq::is_cpd_truncated(s, cfg);
    REQUIRE(v.fails());
    REQUIRE(v.witness.has_value());
    const auto& lam = v.witness->vector;
    cplx sum = 0.0;
    for (cplx l : lam) sum += l;
    CHECK(std::abs(sum) <= 1e-12);
    std::vector<double> g(s.values().begin(), s.values().end());
    CHECK(oracle::quad_form(g, lam) < 0.0);
  }
}

TEST_CASE("PD sequences are CPD") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> loc(-2.0, 2.0);
  std::uniform_real_distribution<double> mass(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const ToleranceConfig cfg;
  int pd_seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> g;
    if (trial % 2 == 0) {
      std::vector<double> x(3), m(3);
      for (int k = 0; k < 3; ++k) {
        x[k] = loc(rng);
        m[k] = mass(rng);
      }
      g = oracle::atomic_moments(x, m, 10);
    } else {
      g.resize(11);
      for (double& v : g) v = noise(rng);
      g[0] += 20.0;
    }
    const RealSequence s(g);
    if (seq::is_pd_truncated(s, cfg).holds()) {
      ++pd_seen;
      CHECK(seq::is_cpd_truncated(s, cfg).holds());
    }
  }
  CHECK(pd_seen >= 30);
}

TEST_CASE("entrywise products of PD sequences are PD") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> loc(-1.5, 1.5);
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  const ToleranceConfig cfg;
  auto draw = [&] {
    std::vector<double> x(3), m(3);
    for (int k = 0; k < 3; ++k) {
      x[k] = loc(rng);
      m[k] = mass(rng);
    }
    return oracle::atomic_moments(x, m, 12);
  };
  for (int pair = 0; pair < 50; ++pair) {
    const auto a = draw();
    const auto b = draw();
    REQUIRE(seq::is_pd_truncated(RealSequence(a), cfg).holds());
    REQUIRE(seq::is_pd_truncated(RealSequence(b), cfg).holds());
    std::vector<double> p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
    CHECK(seq::is_pd_truncated(RealSequence(p), cfg).holds());
  }
}

TEST_CASE("Stieltjes test sees negative support") {
  const ToleranceConfig cfg;
  CHECK(seq::is_stieltjes_truncated(RealSequence(oracle::atomic_moments({0.2, 1.7}, {1.0, 0.5}, 12)), cfg)
            .holds());
  const Verdict v = seq::is_stieltjes_truncated(
      RealSequence(oracle::atomic_moments({-0.5, 1.0}, {1.0, 1.0}, 12)), cfg);
  CHECK(v.fails());
  CHECK(v.witness.has_value());
}

TEST_CASE("exponential probe") {
  const ToleranceConfig cfg;
  const std::vector<double> ts{0.05, 0.2, 0.5, 1.0};
  const RealSequence lin = RealSequence::from_rule([](std::size_t n) { return 0.3 * n; }, 12);
  CHECK(seq::schoenberg_probe(lin, ts, cfg).holds());
  const Verdict v = seq::schoenberg_probe(power_rule(-1.0, 2.0, 12), ts, cfg);
  CHECK(v.fails());
  CHECK(v.witness.has_value());
  CHECK(seq::schoenberg_probe(power_rule(1.0, 3.0, 24), std::vector<double>{100.0}, cfg).status ==
        Status::inconclusive);
  CHECK_THROWS_AS(seq::schoenberg_probe(lin, std::vector<double>{0.0}, cfg), Error);
}

TEST_CASE("growth estimate") {
  const auto g = seq::growth_rate(RealSequence::from_rule(
      [](std::size_t n) { return std::pow(2.0, static_cast<double>(n)); }, 24));
  CHECK(g.is_estimate);
  CHECK(g.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_FALSE(g.quality.empty());
}

TEST_CASE("argument errors") {
  const ToleranceConfig cfg;
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::parse;
  };
  CHECK(code([] { RealSequence(std::vector<double>{1.0, NAN}); }) == ErrorCode::domain);
  CHECK(code([&] { seq::is_cpd_truncated(RealSequence({1.0, 2.0}), cfg); }) == ErrorCode::length);
  CHECK(code([] { seq::difference(RealSequence({1.0, 2.0}), 2); }) == ErrorCode::length);
  CHECK(code([] { seq::hankel(RealSequence({1.0}), 3); }) == ErrorCode::length);
  CHECK(seq::q_poly(0, 5.0) == 0.0);
  CHECK(seq::q_poly(1, 5.0) == 0.0);
}
