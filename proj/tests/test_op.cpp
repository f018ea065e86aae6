#include <doctest.h>

#include "cpd/op.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cpd;
using op::LinearOperator;
using op::Polynomial;

namespace {

const ToleranceConfig kCfg;

Matrix jordan3iso() {
  Matrix m(2, 2);
  m << 1, 1, 0, 1;
  return m;
}

Polynomial random_poly(std::mt19937_64& rng, std::size_t deg) {
  std::normal_distribution<double> nd;
  std::vector<cplx> c(deg + 1);
  for (auto& x : c) x = cplx(nd(rng), nd(rng));
  return Polynomial(c);
}

// sum a_i T*^i T^i by explicit powers
Matrix oracle_hereditary(const Polynomial& p, const Matrix& t) {
  Matrix s = Matrix::Zero(t.rows(), t.cols());
  for (std::size_t i = 0; i <= p.degree(); ++i) s += p.coeff(i) * oracle::gram(t, i);
  return s;
}

op::CpdOperatorReport cpd_of(const LinearOperator& t, std::size_t upto, std::size_t window,
                             std::size_t n_random = 8) {
  const auto probes = op::default_probes(t, op::probe_rows(t, upto, window), n_random, 99);
  return op::is_cpd_operator(t, probes, upto, window, kCfg);
}

Matrix normal_matrix(std::mt19937_64& rng, const std::vector<cplx>& eig) {
  const Eigen::Index d = static_cast<Eigen::Index>(eig.size());
  const Matrix u = oracle::random_unitary(rng, d);
  Vector e(d);
  for (Eigen::Index i = 0; i < d; ++i) e(i) = eig[static_cast<std::size_t>(i)];
  return u * e.asDiagonal() * u.adjoint();
}

Matrix direct_sum(const Matrix& a, const Matrix& b) {
  Matrix m = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

// strict 4-isometry: ||T^n e_j||^2 = (n+j+1)^3 / (j+1)^3
LinearOperator cubic_shift() {
  op::BandedOperator b;
  b.slots.push_back({0.0, [](std::size_t n) {
                       const double r = (n + 2.0) / (n + 1.0);
                       return std::sqrt(r * r * r);
                     }});
  return LinearOperator::banded(b, "cubic");
}

}  // namespace

TEST_CASE("polynomial basics") {
  const Polynomial p = Polynomial::one_minus_x_pow(3);
  CHECK(p.degree() == 3);
  CHECK(std::abs(p.coeff(1) + 3.0) == 0.0);
  CHECK(std::abs(p.coeff(3) + 1.0) == 0.0);
  const Polynomial r = Polynomial::from_roots({2.0, -1.0});
  CHECK(std::abs(r(2.0)) == 0.0);
  CHECK(std::abs(r(0.0) + 2.0) < 1e-15);
  CHECK(Polynomial().degree() == 0);
  CHECK((p * Polynomial::monomial(2)).degree() == 5);
}

TEST_CASE("hereditary calculus against explicit powers") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> dd(1, 4), pd(0, 5);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix m = oracle::random_matrix(rng, dd(rng), 0.5);
    const LinearOperator t = LinearOperator::dense(m);
    const Polynomial p = random_poly(rng, static_cast<std::size_t>(pd(rng)));
    const Matrix h = op::hereditary_eval(p, t, 0);
    const double scale = std::max(1.0, oracle::max_abs(oracle_hereditary(p, m)));
    CHECK(oracle::max_abs(h - oracle_hereditary(p, m)) <= 1e-11 * scale);
    // (X p)<T> = T* p<T> T
    const Matrix xp = op::hereditary_eval(Polynomial::monomial(1) * p, t, 0);
    CHECK(oracle::max_abs(xp - m.adjoint() * h * m) <= 1e-11 * std::max(1.0, oracle::max_abs(xp)));
  }
}

TEST_CASE("nabla calculus is multiplicative") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearOperator t = LinearOperator::dense(oracle::random_matrix(rng, 3, 0.4));
    const Polynomial p = random_poly(rng, 1 + trial % 4);
    const Polynomial q = random_poly(rng, 4 - trial % 4);
    const Matrix lhs = op::nabla_eval(p, t, op::hereditary_eval(q, t, 0));
    const Matrix rhs = op::hereditary_eval(p * q, t, 0);
    CHECK(oracle::max_abs(lhs - rhs) <= 1e-11 * std::max(1.0, oracle::max_abs(rhs)));
  }
}

TEST_CASE("trajectories agree with the hereditary calculus") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = oracle::random_matrix(rng, 3, 0.45);
    const LinearOperator t = LinearOperator::dense(m);
    const Vector h = oracle::random_matrix(rng, 3).col(0);
    const auto g = op::trajectory(t, h, 10, 0);
    for (std::size_t n = 0; n <= 10; ++n) {
      const cplx q = h.dot(op::hereditary_eval(Polynomial::monomial(n), t, 0) * h);
      CHECK(std::abs(q.real() - g[n]) <= 1e-11 * std::max(1.0, g[n]));
      CHECK(std::abs((oracle::mpow(m, n) * h).squaredNorm() - g[n]) <= 1e-11 * std::max(1.0, g[n]));
    }
  }
  // banded: against a truncated matrix large enough to be exact
  const LinearOperator s = LinearOperator::shift(op::ShiftWeights::wab(4.0, 2.0));
  const Matrix big = oracle::shift_matrix([](std::size_t n) { return oracle::wab_weight(4, 2, n); }, 40);
  Vector h = Vector::Zero(4);
  h << 1.0, cplx(0, 2), -0.5, 0.25;
  const auto g = op::trajectory(s, h, 12, 32);
  Vector hb = Vector::Zero(40);
  hb.head(4) = h;
  for (std::size_t n = 0; n <= 12; ++n) {
    CHECK(std::abs((oracle::mpow(big, n) * hb).squaredNorm() - g[n]) <= 1e-11 * g[n]);
  }
}

TEST_CASE("banded brackets against truncated matrices") {
  struct Case {
    op::ShiftWeights w;
    std::function<double(std::size_t)> oracle_w;
  };
  std::vector<Case> cases{
      {op::ShiftWeights::wab(4, 2), [](std::size_t n) { return oracle::wab_weight(4, 2, n); }},
      {op::ShiftWeights::wab(0.25, 1), [](std::size_t n) { return oracle::wab_weight(0.25, 1, n); }},
      {op::ShiftWeights::three_isometry(), [](std::size_t n) { return std::sqrt((n + 3.0) / (n + 1.0)); }},
      {op::ShiftWeights::two_isometry(), [](std::size_t n) { return std::sqrt((n + 2.0) / (n + 1.0)); }},
      {op::ShiftWeights::explicit_list({0.5, 2.0, 0.7}, 1.0),
       [](std::size_t n) { return n < 3 ? std::vector<double>{0.5, 2.0, 0.7}[n] : 1.0; }},
  };
  const std::size_t window = 20;
  for (const auto& c : cases) {
    const LinearOperator t = LinearOperator::shift(c.w);
    const Matrix big = oracle::shift_matrix(c.oracle_w, 40);
    for (std::size_t m = 1; m <= 6; ++m) {
      const Matrix b = op::bracket_bm(t, m, window);
      CHECK(b.rows() == static_cast<Eigen::Index>(window - m));
      const Matrix o = leading(oracle::bracket(big, m), b.rows());
      CHECK(oracle::max_abs(b - o) <= 1e-12 * std::max(1.0, oracle::max_abs(o)) * (1 << m));
    }
  }
}

TEST_CASE("W_{a,b} closed forms") {
  const LinearOperator t = LinearOperator::shift(op::ShiftWeights::wab(4.0, 2.0));
  const Matrix b2 = op::bracket_bm(t, 2, 24);
  Matrix want = Matrix::Zero(b2.rows(), b2.cols());
  want(0, 0) = 1.0;
  CHECK(oracle::max_abs(b2 - want) <= 1e-12);
  Vector e0 = Vector::Zero(1);
  e0(0) = 1.0;
  const auto g = op::trajectory(t, e0, 15, 24);
  for (std::size_t n = 1; n <= 15; ++n) CHECK(g[n] == doctest::Approx(4.0 * (1.0 + (n - 1.0))).epsilon(1e-13));
  const double nrm = op::op_norm(t, 24);
  CHECK(nrm * nrm == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(cpd_of(t, 12, 24).verdict.holds());
}

TEST_CASE("B_2 of the 3-isometric shift") {
  const LinearOperator t = LinearOperator::shift(op::ShiftWeights::three_isometry());
  const Matrix b2 = op::bracket_bm(t, 2, 24);
  for (Eigen::Index n = 0; n < b2.rows(); ++n) {
    CHECK(std::abs(b2(n, n) - 2.0 / ((n + 1.0) * (n + 2.0))) <= 1e-12);
  }
  CHECK(oracle::max_abs(b2 - Matrix(b2.diagonal().asDiagonal())) <= 1e-15);
  CHECK(op::is_m_isometry(t, 3, 24, kCfg, true).holds());
}

TEST_CASE("m-isometries") {
  const LinearOperator j = LinearOperator::dense(jordan3iso());
  CHECK(op::is_m_isometry(j, 3, 0, kCfg, true).holds());
  CHECK(op::is_m_isometry(j, 2, 0, kCfg).fails());
  CHECK(op::is_m_isometry(j, 4, 0, kCfg, true).fails());  // not strict at 4

  const LinearOperator c = cubic_shift();
  CHECK(op::is_m_isometry(c, 4, 24, kCfg, true).holds());
  CHECK(op::is_m_isometry(c, 3, 24, kCfg).fails());

  const LinearOperator k = op::tensor(j, j);
  CHECK(op::is_m_isometry(k, 5, 0, kCfg, true).holds());
  CHECK(oracle::max_abs(oracle::bracket(k.matrix(), 5)) <= 1e-10);
  CHECK(spectral_norm(oracle::bracket(k.matrix(), 4)) > 1e-3);

  Matrix n3 = Matrix::Identity(3, 3);
  n3(0, 1) = n3(1, 2) = 1.0;
  CHECK(op::is_m_isometry(LinearOperator::dense(n3), 5, 0, kCfg, true).holds());

  CHECK(op::is_m_isometry(LinearOperator::shift(op::ShiftWeights::isometry()), 1, 16, kCfg, true).holds());
  CHECK_THROWS_AS(op::is_m_isometry(j, 0, 0, kCfg), Error);
}

TEST_CASE("window is enforced") {
  const LinearOperator t = LinearOperator::shift(op::ShiftWeights::two_isometry());
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::parse;
  };
  CHECK(code([&] { op::bracket_bm(t, 8, 8); }) == ErrorCode::window);
  CHECK(code([&] { op::op_moment_sequence(t, 10, 12); }) == ErrorCode::window);
  Vector h = Vector::Zero(8);
  h(7) = 1.0;
  CHECK(code([&] { t.apply(h, 8); }) == ErrorCode::window);
  CHECK(code([&] { op::trajectory(t, Vector::Ones(3), 10, 12); }) == ErrorCode::window);
  CHECK(code([&] { cpd_of(t, 2, 16); }) == ErrorCode::length);
  CHECK(op::bracket_bm(t, 7, 8).rows() == 1);
}

TEST_CASE("tensor needs dense factors") {
  const LinearOperator s = LinearOperator::shift(op::ShiftWeights::isometry());
  CHECK_THROWS_AS(op::tensor(s, s), Error);
  CHECK_THROWS_AS(LinearOperator::dense(Matrix::Zero(2, 3)), Error);
}

TEST_CASE("CPD closures on dense examples") {
  std::mt19937_64 rng(43);
  const Matrix j = jordan3iso();
  const Matrix d = normal_matrix(rng, {0.3, cplx(0, 0.9), 1.4});
  CHECK(cpd_of(LinearOperator::dense(j), 12, 0).verdict.holds());
  CHECK(cpd_of(LinearOperator::dense(d), 12, 0).verdict.holds());

  const Matrix sum = direct_sum(j, d);
  CHECK(cpd_of(LinearOperator::dense(sum), 12, 0).verdict.holds());

  // span{e_0} is invariant for the Jordan block; span{e_0, e_2, e_3, e_4} for the sum
  std::vector<Eigen::Index> keep{0, 2, 3, 4};
  Matrix r(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) r(a, b) = sum(keep[a], keep[b]);
  for (int a = 0; a < 4; ++a) CHECK(std::abs(sum(1, keep[a])) == 0.0);
  CHECK(cpd_of(LinearOperator::dense(r), 12, 0).verdict.holds());

  for (const Matrix& m : {j, d, sum}) {
    CHECK(cpd_of(LinearOperator::dense(m.inverse()), 12, 0).verdict.holds());
  }
}

TEST_CASE("normal contractions are normaloid") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_real_distribution<double> u(0.0, 1.2), ph(0.0, 6.28);
    std::vector<cplx> e;
    for (int k = 0; k < 3; ++k) e.push_back(std::polar(u(rng), ph(rng)));
    const Matrix m = normal_matrix(rng, e);
    const double n1 = spectral_norm(m);
    for (std::size_t n = 1; n <= 6; ++n) {
      CHECK(std::abs(spectral_norm(oracle::mpow(m, n)) - std::pow(n1, n)) <= 1e-8 * std::pow(n1, n));
    }
  }
}

TEST_CASE("alpha I + N") {
  Matrix n = Matrix::Zero(2, 2);
  n(0, 1) = 1.0;
  auto make = [&](cplx a) { return LinearOperator::dense(Matrix(a * Matrix::Identity(2, 2) + n)); };
  for (cplx a : {cplx(0.3), std::polar(0.9, M_PI / 4), cplx(0, 0.5)}) {
    const auto rep = cpd_of(make(a), 24, 0);
    CHECK(rep.verdict.fails());
    CHECK(rep.failing_probe.has_value());
    CHECK(rep.verdict.witness.has_value());
  }
  for (cplx a : {cplx(1.0), cplx(-1.0), std::polar(1.0, 0.7)}) {
    CHECK(cpd_of(make(a), 24, 0).verdict.holds());
  }
}

TEST_CASE("Kronecker square of the Jordan 3-isometry is not CPD") {
  const LinearOperator k = op::tensor(LinearOperator::dense(jordan3iso()), LinearOperator::dense(jordan3iso()));
  const auto rep = cpd_of(k, 24, 0, 64);
  CHECK(rep.verdict.fails());
  REQUIRE(rep.failing_probe.has_value());
  CHECK(*rep.failing_probe < rep.probes_checked);
  CHECK(rep.seed == 99);
}

TEST_CASE("probes are seeded") {
  const LinearOperator t = LinearOperator::dense(jordan3iso());
  const auto a = op::default_probes(t, 2, 5, 7);
  const auto b = op::default_probes(t, 2, 5, 7);
  const auto c = op::default_probes(t, 2, 5, 8);
  REQUIRE(a.probes.size() == 7);
  for (std::size_t i = 0; i < a.probes.size(); ++i) {
    CHECK((a.probes[i] - b.probes[i]).norm() == 0.0);
    CHECK(a.probes[i].norm() == doctest::Approx(1.0));
  }
  CHECK((a.probes[3] - c.probes[3]).norm() > 0.0);
}

TEST_CASE("hyperexpansive surrogate") {
  const LinearOperator t = LinearOperator::shift(op::ShiftWeights::two_isometry());
  for (const Verdict& v : op::hyperexpansive_window(t, 5, 20, kCfg)) CHECK(v.holds());
  const LinearOperator c = LinearOperator::dense(Matrix(0.5 * Matrix::Identity(2, 2)));
  CHECK(op::hyperexpansive_window(c, 1, 0, kCfg)[0].fails());
}

TEST_CASE("difference limits") {
  const LinearOperator d = LinearOperator::dense(Matrix(RVector::Map(std::vector<double>{0.3, 0.9}.data(), 2).cast<cplx>().asDiagonal()));
  const auto a = op::difference_limit(d, 40, 0, kCfg);
  CHECK(a.monotone.holds());
  CHECK(a.kind != op::LimitKind::divergent);
  // D = lim (T*^{n+1}T^{n+1} - T*^n T^n) = 0 for a strict contraction
  CHECK(oracle::max_abs(a.estimate) <= 1e-3);

  const auto b = op::difference_limit(LinearOperator::dense(jordan3iso()), 12, 0, kCfg);
  CHECK(b.kind == op::LimitKind::divergent);
  CHECK(b.divergence_witness.has_value());

  const auto c = op::difference_limit(LinearOperator::shift(op::ShiftWeights::isometry()), 8, 20, kCfg);
  CHECK(c.kind == op::LimitKind::converged);
  CHECK(oracle::max_abs(c.estimate) == 0.0);

  // W_{4,2}: T*^n T^n = diag(4n, 1 + n, ...) on e_0 direction, D = B_2 - B_1
  const LinearOperator w = LinearOperator::shift(op::ShiftWeights::wab(4.0, 2.0));
  const auto e = op::difference_limit(w, 10, 24, kCfg);
  CHECK(e.kind == op::LimitKind::converged);
  const Eigen::Index r = e.estimate.rows();
  const Matrix want = leading(op::bracket_bm(w, 2, 24) - op::bracket_bm(w, 1, 24), r);
  CHECK(oracle::max_abs(e.estimate - want) <= 1e-12);
}

TEST_CASE("associated shift of a trajectory") {
  const LinearOperator j = LinearOperator::dense(jordan3iso());
  Vector e1 = Vector::Zero(2);
  e1(1) = 1.0;
  // ||T^n e_1||^2 = 1 + n^2
  const auto a = op::associated_shift_weights(j, e1, 12, 0, kCfg);
  CHECK_FALSE(a.bounded_on_window);
  CHECK(a.subnormal.holds());
  REQUIRE(a.weights.size() == 12);
  CHECK(a.weights[3] == doctest::Approx(std::exp(7.0 / 2.0)));
  CHECK(op::complete_hyperexpansive_dual_check(j, e1, 12, 0, kCfg).fails());

  const LinearOperator t2 = LinearOperator::shift(op::ShiftWeights::two_isometry());
  Vector e0 = Vector::Zero(1);
  e0(0) = 1.0;
  // ||T^n e_0||^2 = 1 + n
  const auto b = op::associated_shift_weights(t2, e0, 12, 20, kCfg);
  CHECK(b.bounded_on_window);
  REQUIRE(b.norm_sq_estimate.has_value());
  CHECK(*b.norm_sq_estimate == doctest::Approx(std::exp(1.0)));
  CHECK(b.subnormal.holds());
  CHECK(op::complete_hyperexpansive_dual_check(t2, e0, 12, 20, kCfg).holds());
}

TEST_CASE("spectral radius") {
  const LinearOperator d = LinearOperator::dense(Matrix(Vector::LinSpaced(3, 0.2, 0.8).asDiagonal()));
  const auto r = op::spectral_radius(d, 0);
  CHECK_FALSE(r.is_estimate);
  CHECK(r.value == doctest::Approx(0.8));
  const auto s = op::spectral_radius(LinearOperator::shift(op::ShiftWeights::isometry()), 32);
  CHECK(s.is_estimate);
  CHECK(s.value == doctest::Approx(1.0));
  const auto w = op::spectral_radius(LinearOperator::shift(op::ShiftWeights::three_isometry()), 40);
  CHECK(w.value >= 1.0);
}

TEST_CASE("powers of banded operators") {
  const LinearOperator t = LinearOperator::shift(op::ShiftWeights::wab(4.0, 2.0));
  const LinearOperator t2 = op::power(t, 2);
  const Matrix big = oracle::shift_matrix([](std::size_t n) { return oracle::wab_weight(4, 2, n); }, 50);
  const Matrix b = op::bracket_bm(t2, 2, 24);
  const Matrix o = leading(oracle::bracket(oracle::mpow(big, 2), 2), b.rows());
  CHECK(b.rows() == 20);
  CHECK(oracle::max_abs(b - o) <= 1e-11);
}
