#include <doctest.h>

#include "cpd/qclass.hpp"
#include "fixtures.hpp"

#include <cmath>
#include <random>

using namespace cpd;

namespace {

const ToleranceConfig kCfg;

bool region_oracle(double s, double t) { return s * s + t * t <= 1.0 || s >= 1.0; }

// dimension of the null space from singular values
Eigen::Index nullity(const Matrix& m, double tol = 1e-10) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const RVector& sv = svd.singularValues();
  const double cut = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) k += sv(i) <= cut;
  return k + (m.cols() - sv.size());
}

Matrix kernel_basis(const Matrix& m, double tol = 1e-10) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Eigen::Index k = nullity(m, tol);
  return svd.matrixV().rightCols(k);
}

Eigen::Index rank_of(const Matrix& m) { return m.cols() - nullity(m); }

}  // namespace

TEST_CASE("pinned pairs") {
  struct Pin {
    double s, t;
    bool cpd, subnormal;
    double a, loc;
  };
  for (const Pin& p : {Pin{0.6, 0.7, true, true, 0.096, 0.36}, Pin{1.5, 7.0, true, false, 62.8125, 2.25},
                       Pin{0.0, 0.5, true, true, 0.75, 0.0}, Pin{2.0, 3.0, true, false, 36.0, 4.0},
                       Pin{0.9, 0.9, false, false, 0.0, 0.0}}) {
    CAPTURE(p.s);
    CAPTURE(p.t);
    const auto q = qclass::build_qclass({p.s}, {p.t});
    CHECK(qclass::validate_block_form(q).holds());
    const auto rep = qclass::qclass_cpd_test(q, kCfg);
    CHECK(rep.verdict.holds() == p.cpd);
    CHECK(rep.verdict.fails() == !p.cpd);
    CHECK(qclass::qclass_subnormal_region(q).verdict.holds() == p.subnormal);
    if (!p.cpd) {
      CHECK(rep.outside == std::vector<std::size_t>{0});
      continue;
    }
    CHECK(qclass::a_values(q)[0] == doctest::Approx(p.a).epsilon(1e-12));
    const auto qm = qclass::qclass_M(q, 4, kCfg);
    REQUIRE(qm.M.size() == 1);
    CHECK(qm.M.atoms()[0].location == doctest::Approx(p.loc));
    CHECK(std::abs(qm.M.atoms()[0].weight(0, 0) - p.a) <= 1e-10 * p.a);
  }
}

TEST_CASE("region and bracket routes agree") {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  int inside = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double s = u(rng), t = u(rng);
    CAPTURE(s);
    CAPTURE(t);
    const auto q = qclass::build_qclass({s}, {t});
    const auto rep = qclass::qclass_cpd_test(q, kCfg);
    CHECK(rep.region == region_oracle(s, t));
    CHECK(qclass::in_cpd_region(s, t) == region_oracle(s, t));
    CHECK(rep.region == (rep.b2.holds() && rep.b4.holds()));
    CHECK(rep.verdict.status != Status::inconclusive);
    inside += rep.region;
  }
  CHECK(inside > 5);
  CHECK(inside < 45);
}

TEST_CASE("A formula against the truncated matrix") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> s{u(rng), u(rng), u(rng)}, t{u(rng), u(rng), u(rng)};
    const auto q = qclass::build_qclass(s, t);
    CHECK(qclass::a_formula_gap(q) <= 1e-10);
    const Matrix big = fixtures::banded_matrix(q.op, 20);
    const Matrix b2 = oracle::bracket(big, 2);
    const auto a = qclass::a_values(q);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        const double want = i == j ? a[static_cast<std::size_t>(i)] : 0.0;
        CHECK(std::abs(b2(i, j) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
      }
    }
    // A_n = T*^n B_2 T^n vanishes off the H2 block and is Q*^n A Q^n on it
    const Matrix p = oracle::mpow(big, 3);
    const Matrix a3 = p.adjoint() * b2 * p;
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double want = a[static_cast<std::size_t>(i)] * std::pow(s[static_cast<std::size_t>(i)], 6.0);
      CHECK(std::abs(a3(i, i) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
    CHECK(oracle::max_abs(leading(a3, 24).bottomRightCorner(21, 21)) <= 1e-9 * std::max(1.0, oracle::max_abs(a3)));
  }
}

TEST_CASE("measure of a two-pair operator") {
  const auto q = qclass::build_qclass({0.6, 1.5}, {0.7, 7.0});
  CHECK(qclass::qclass_cpd_test(q, kCfg, 20).verdict.holds());
  const auto mr = rep::recover_M(q.op, 12, 20, kCfg);
  const auto qm = qclass::qclass_M(q, mr.M.dim(), kCfg);
  CHECK(qm.a_psd.holds());
  REQUIRE(qm.M.size() == 2);
  for (std::size_t n = 0; n <= 12; ++n) {
    const Matrix a = mr.moments[n];
    CHECK(oracle::max_abs(qm.M.moment(n) - a) <= 1e-9 * std::max(1.0, oracle::max_abs(a)));
  }
  CHECK_FALSE(qclass::qclass_subnormal_region(q).verdict.holds());
  CHECK(qclass::qclass_subnormal_region(q).gap == std::vector<std::size_t>{1});
}

TEST_CASE("commuting positive matrices reduce to their joint spectrum") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix u = oracle::random_unitary(rng, 3);
    // repeated |Q| eigenvalue so the reduction has to split by |E|
    RVector s(3), t(3);
    s << 0.6, 0.6, 1.5;
    t << 0.2, 0.7, 7.0;
    const Matrix aq = u * s.cast<cplx>().asDiagonal() * u.adjoint();
    const Matrix ae = u * t.cast<cplx>().asDiagonal() * u.adjoint();
    const auto js = qclass::joint_spectrum(aq, ae);
    REQUIRE(js.s.size() == 3);
    std::vector<std::pair<double, double>> got, want{{0.6, 0.2}, {0.6, 0.7}, {1.5, 7.0}};
    for (std::size_t j = 0; j < 3; ++j) got.emplace_back(js.s[j], js.t[j]);
    std::sort(got.begin(), got.end());
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(got[j].first == doctest::Approx(want[j].first).epsilon(1e-9));
      CHECK(got[j].second == doctest::Approx(want[j].second).epsilon(1e-9));
    }
    CHECK(oracle::max_abs(js.U.adjoint() * aq * js.U - Matrix(RVector::Map(js.s.data(), 3).cast<cplx>().asDiagonal())) <= 1e-9);
    const auto q = qclass::build_qclass_from_matrices(aq, ae);
    CHECK(qclass::qclass_cpd_test(q, kCfg).verdict.holds());
  }
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  b(0, 1) = b(1, 0) = 1.0;
  CHECK_THROWS_AS(qclass::joint_spectrum(a, b), Error);  // do not commute
  CHECK_THROWS_AS(qclass::joint_spectrum(-a, a), Error);  // not PSD
}

TEST_CASE("kernel and range of commuting normal products") {
  std::mt19937_64 rng(79);
  std::bernoulli_distribution zero(0.4);
  std::uniform_real_distribution<double> val(0.5, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 5;
    Vector da(d), db(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      da(i) = zero(rng) ? 0.0 : val(rng);
      db(i) = zero(rng) ? 0.0 : val(rng);
    }
    const Matrix u = oracle::random_unitary(rng, d);
    const Matrix a = u * da.asDiagonal() * u.adjoint();
    const Matrix b = u * db.asDiagonal() * u.adjoint();
    // ker AB = ker A + ker B
    Matrix sum(d, 0);
    const Matrix ka = kernel_basis(a), kb = kernel_basis(b);
    sum.resize(d, ka.cols() + kb.cols());
    sum << ka, kb;
    CHECK(nullity(a * b) == rank_of(sum));
    CHECK(oracle::max_abs(a * b * sum) <= 1e-10);
    // closure of ran AB = ran A intersect ran B: dimensions and containment
    Eigen::Index both = 0;
    for (Eigen::Index i = 0; i < d; ++i) both += da(i) != 0.0 && db(i) != 0.0;
    CHECK(rank_of(a * b) == both);
    const Matrix r = (a * b).colPivHouseholderQr().householderQ() * Matrix::Identity(d, both);
    CHECK(oracle::max_abs(kernel_basis(a).adjoint() * r) <= 1e-9);
    CHECK(oracle::max_abs(kernel_basis(b).adjoint() * r) <= 1e-9);
  }
}

TEST_CASE("invalid pairs") {
  CHECK_THROWS_AS(qclass::build_qclass({0.5}, {}), Error);
  CHECK_THROWS_AS(qclass::build_qclass({-0.5}, {0.1}), Error);
  CHECK_THROWS_AS(qclass::build_qclass(std::vector<double>{}, std::vector<double>{}), Error);
}
