#include "cpd/op.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cpd::op {

// --- Polynomial ------------------------------------------------------------

Polynomial::Polynomial(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {}

Polynomial Polynomial::monomial(std::size_t n, cplx coeff) {
  std::vector<cplx> c(n + 1, cplx{});
  c[n] = coeff;
  return Polynomial(std::move(c));
}

Polynomial Polynomial::one_minus_x_pow(std::size_t m) {
  std::vector<cplx> c(m + 1);
  double binom = 1.0;
  for (std::size_t k = 0; k <= m; ++k) {
    c[k] = (k % 2 == 0 ? 1.0 : -1.0) * binom;
    binom = binom * static_cast<double>(m - k) / static_cast<double>(k + 1);
  }
  return Polynomial(std::move(c));
}

Polynomial Polynomial::from_roots(const std::vector<cplx>& roots) {
  Polynomial p({1.0});
  for (cplx r : roots) p = p * Polynomial({-r, 1.0});
  return p;
}

std::size_t Polynomial::degree() const {
  for (std::size_t i = c_.size(); i-- > 0;) {
    if (c_[i] != cplx{}) return i;
  }
  return 0;
}

cplx Polynomial::operator()(cplx x) const {
  cplx acc{};
  for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
  return acc;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  std::vector<cplx> c(std::max(c_.size(), o.c_.size()), cplx{});
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = coeff(i) + o.coeff(i);
  return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (c_.empty() || o.c_.empty()) return Polynomial();
  std::vector<cplx> c(c_.size() + o.c_.size() - 1, cplx{});
  for (std::size_t i = 0; i < c_.size(); ++i) {
    for (std::size_t j = 0; j < o.c_.size(); ++j) c[i + j] += c_[i] * o.c_[j];
  }
  return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(cplx s) const {
  std::vector<cplx> c = c_;
  for (auto& x : c) x *= s;
  return Polynomial(std::move(c));
}

// --- weights ---------------------------------------------------------------

ShiftWeights ShiftWeights::isometry() {
  return {[](std::size_t) { return 1.0; }, "isometry: weights 1"};
}

ShiftWeights ShiftWeights::two_isometry() {
  return {[](std::size_t n) {
            return std::sqrt(static_cast<double>(n + 2) / static_cast<double>(n + 1));
          },
          "weights sqrt((n+2)/(n+1))"};
}

ShiftWeights ShiftWeights::three_isometry() {
  return {[](std::size_t n) {
            return std::sqrt(static_cast<double>(n + 3) / static_cast<double>(n + 1));
          },
          "weights sqrt((n+3)/(n+1))"};
}

ShiftWeights ShiftWeights::wab(double a, double b) {
  if (!(a > 0.0) || !(b >= 1.0)) {
    throw Error(ErrorCode::domain, "W_{a,b} needs a > 0 and b >= 1");
  }
  std::ostringstream os;
  os << "W_{a,b} with a=" << a << ", b=" << b;
  return {[a, b](std::size_t n) {
            if (n == 0) return std::sqrt(a);
            const double nn = static_cast<double>(n);
            return std::sqrt((1.0 + nn * (b - 1.0)) / (1.0 + (nn - 1.0) * (b - 1.0)));
          },
          os.str()};
}

ShiftWeights ShiftWeights::explicit_list(std::vector<double> head, double tail) {
  for (double w : head) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::domain, "shift weights must be positive and finite");
    }
  }
  if (!(tail > 0.0) || !std::isfinite(tail)) {
    throw Error(ErrorCode::domain, "shift tail weight must be positive and finite");
  }
  std::ostringstream os;
  os << "explicit weights (" << head.size() << " listed, tail " << tail << ")";
  return {[head = std::move(head), tail](std::size_t n) {
            return n < head.size() ? head[n] : tail;
          },
          os.str()};
}

// --- LinearOperator --------------------------------------------------------

LinearOperator LinearOperator::dense(Matrix m, std::string label) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::domain, "dense operator must be a nonempty square matrix");
  }
  if (!m.allFinite()) throw Error(ErrorCode::domain, "dense operator has non-finite entries");
  LinearOperator t;
  t.rep_ = std::move(m);
  t.label_ = std::move(label);
  return t;
}

LinearOperator LinearOperator::shift(ShiftWeights w) {
  BandedOperator b;
  b.slots.push_back({0.0, w.rule});
  return banded(std::move(b), w.description);
}

LinearOperator LinearOperator::banded(BandedOperator b, std::string label) {
  if (b.slots.empty()) throw Error(ErrorCode::domain, "banded operator needs a slot");
  if (b.power == 0) throw Error(ErrorCode::domain, "banded operator power must be >= 1");
  LinearOperator t;
  t.rep_ = std::move(b);
  t.label_ = std::move(label);
  return t;
}

const Matrix& LinearOperator::matrix() const {
  if (!is_dense()) throw Error(ErrorCode::unsupported, "operator is not dense");
  return std::get<Matrix>(rep_);
}

const BandedOperator& LinearOperator::bands() const {
  if (is_dense()) throw Error(ErrorCode::unsupported, "operator is not banded");
  return std::get<BandedOperator>(rep_);
}

std::size_t LinearOperator::slots() const {
  if (is_dense()) return static_cast<std::size_t>(matrix().rows());
  return bands().slots.size();
}

Eigen::Index LinearOperator::block_size(std::size_t window,
                                        std::size_t degree) const {
  if (is_dense()) return matrix().rows();
  const std::size_t used = degree * bands().power;
  if (window <= used) {
    std::ostringstream os;
    os << label_ << ": degree " << degree << " needs " << used
       << " extra positions, window is " << window;
    throw Error(ErrorCode::window, os.str());
  }
  return static_cast<Eigen::Index>((window - used) * slots());
}

Matrix LinearOperator::apply_cols(const Matrix& h, std::size_t window) const {
  if (is_dense()) {
    if (h.rows() != matrix().cols()) {
      throw Error(ErrorCode::domain, "vector dimension does not match operator");
    }
    return matrix() * h;
  }
  const BandedOperator& b = bands();
  const Eigen::Index s = static_cast<Eigen::Index>(b.slots.size());
  if (h.rows() % s != 0) {
    throw Error(ErrorCode::domain, "banded vector length is not a multiple of slots");
  }
  Matrix cur = h;
  for (std::size_t rep = 0; rep < b.power; ++rep) {
    const Eigen::Index positions = cur.rows() / s;
    if (static_cast<std::size_t>(positions + 1) > window) {
      std::ostringstream os;
      os << label_ << ": computation needs position " << positions
         << " outside window " << window;
      throw Error(ErrorCode::window, os.str());
    }
    Matrix next = Matrix::Zero(cur.rows() + s, cur.cols());
    for (Eigen::Index i = 0; i < cur.rows(); ++i) {
      const std::size_t slot = static_cast<std::size_t>(i % s);
      const std::size_t pos = static_cast<std::size_t>(i / s);
      const BandedSlot& sl = b.slots[slot];
      if (pos == 0 && sl.head != 0.0) next.row(i) += sl.head * cur.row(i);
      next.row(i + s) += sl.weight(pos) * cur.row(i);
    }
    cur = std::move(next);
  }
  return cur;
}

Vector LinearOperator::apply(const Vector& h, std::size_t window) const {
  return apply_cols(Matrix(h), window).col(0);
}

LinearOperator power(const LinearOperator& t, std::size_t i) {
  if (i == 0) throw Error(ErrorCode::domain, "operator power must be >= 1");
  const std::string label = t.label() + "^" + std::to_string(i);
  if (t.is_dense()) {
    Matrix m = Matrix::Identity(t.matrix().rows(), t.matrix().cols());
    for (std::size_t k = 0; k < i; ++k) m = m * t.matrix();
    return LinearOperator::dense(std::move(m), label);
  }
  BandedOperator b = t.bands();
  b.power *= i;
  return LinearOperator::banded(std::move(b), label);
}

std::vector<Matrix> power_images(const LinearOperator& t, std::size_t degree,
                                 std::size_t window) {
  const Eigen::Index rows = t.block_size(window, degree);
  std::vector<Matrix> out;
  out.reserve(degree + 1);
  out.push_back(Matrix::Identity(rows, rows));
  for (std::size_t i = 0; i < degree; ++i) {
    out.push_back(t.apply_cols(out.back(), window));
  }
  return out;
}

Matrix hereditary_eval(const Polynomial& p, const LinearOperator& t,
                       std::size_t window) {
  const std::size_t deg = p.degree();
  const auto imgs = power_images(t, deg, window);
  const Eigen::Index rows = imgs.front().rows();
  Matrix out = Matrix::Zero(rows, rows);
  for (std::size_t i = 0; i <= deg; ++i) {
    if (p.coeff(i) == cplx{}) continue;
    out += p.coeff(i) * (imgs[i].adjoint() * imgs[i]);
  }
  return out;
}

Matrix nabla_eval(const Polynomial& p, const LinearOperator& t, const Matrix& a) {
  const Matrix& m = t.matrix();
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  Matrix cur = a;
  for (std::size_t i = 0; i <= p.degree(); ++i) {
    if (i > 0) cur = m.adjoint() * cur * m;
    out += p.coeff(i) * cur;
  }
  return out;
}

Matrix bracket_bm(const LinearOperator& t, std::size_t m, std::size_t window) {
  return hereditary_eval(Polynomial::one_minus_x_pow(m), t, window);
}

double op_norm(const LinearOperator& t, std::size_t window) {
  if (t.is_dense()) return spectral_norm(t.matrix());
  return std::sqrt(spectral_norm(hereditary_eval(Polynomial::monomial(1), t, window)));
}

namespace {

Witness top_direction(const Matrix& h, const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  const RVector& ev = es.eigenvalues();
  Eigen::Index k = 0;
  ev.cwiseAbs().maxCoeff(&k);
  return Witness{what, to_std(es.eigenvectors().col(k)), ev(k)};
}

}  // namespace

Verdict is_m_isometry(const LinearOperator& t, std::size_t m,
                      std::size_t window, const ToleranceConfig& cfg,
                      bool strict) {
  if (m == 0) throw Error(ErrorCode::domain, "m-isometry needs m >= 1");
  const double tn = op_norm(t, window);
  const auto tol_for = [&](std::size_t k) {
    return cfg.psd_tol * std::max(1.0, std::pow(tn, 2.0 * static_cast<double>(k)));
  };
  const Matrix bm = bracket_bm(t, m, window);
  const double nm = spectral_norm(bm);
  if (nm > tol_for(m)) {
    return Verdict::fail(top_direction(bm, "B_" + std::to_string(m) + " != 0"),
                         "||B_m|| = " + std::to_string(nm));
  }
  if (strict && m >= 2) {
    const Matrix prev = bracket_bm(t, m - 1, window);
    const double np = spectral_norm(prev);
    if (np <= tol_for(m - 1)) {
      return Verdict::fail(Witness{"B_{m-1} = 0: not strict", {}, np},
                           "already an (m-1)-isometry");
    }
  }
  return Verdict::pass("||B_m|| within tolerance");
}

seq::RealSequence trajectory(const LinearOperator& t, const Vector& h,
                             std::size_t upto, std::size_t window) {
  std::vector<double> g(upto + 1);
  Vector v = h;
  g[0] = v.squaredNorm();
  for (std::size_t n = 1; n <= upto; ++n) {
    v = t.apply(v, window);
    g[n] = v.squaredNorm();
  }
  return seq::RealSequence(std::move(g));
}

std::vector<Matrix> op_moment_sequence(const LinearOperator& t,
                                       std::size_t upto, std::size_t window) {
  std::vector<Matrix> a;
  a.reserve(upto + 1);
  if (t.is_dense()) {
    const Matrix& m = t.matrix();
    a.push_back(bracket_bm(t, 2, window));
    for (std::size_t n = 0; n < upto; ++n) a.push_back(m.adjoint() * a.back() * m);
    return a;
  }
  const Eigen::Index final_rows = t.block_size(window, upto + 2);
  const Eigen::Index step = static_cast<Eigen::Index>(t.slots() * t.bands().power);
  a.push_back(bracket_bm(t, 2, window));
  for (std::size_t n = 0; n < upto; ++n) {
    const Eigen::Index rows = a.back().rows() - step;
    const Matrix img = t.apply_cols(Matrix::Identity(rows, rows), window);
    a.push_back(img.adjoint() * a.back() * img);
  }
  for (auto& x : a) x = leading(x, final_rows);
  return a;
}

ProbeSet default_probes(const LinearOperator& t, Eigen::Index rows,
                        std::size_t n_random, std::uint64_t seed) {
  ProbeSet ps;
  ps.seed = seed;
  const Eigen::Index n_basis =
      t.is_dense() ? rows : std::min<Eigen::Index>(rows, 12);
  for (Eigen::Index i = 0; i < n_basis; ++i) {
    ps.probes.push_back(Vector::Unit(rows, i));
  }
  const Eigen::Index support =
      t.is_dense() ? rows : std::min<Eigen::Index>(rows, 8);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t k = 0; k < n_random; ++k) {
    Vector v = Vector::Zero(rows);
    for (Eigen::Index i = 0; i < support; ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      v(i) = cplx(re, im);
    }
    v.normalize();
    ps.probes.push_back(std::move(v));
  }
  return ps;
}

Eigen::Index probe_rows(const LinearOperator& t, std::size_t upto,
                        std::size_t window) {
  return t.block_size(window, upto + 2);
}

CpdOperatorReport is_cpd_operator(const LinearOperator& t,
                                  const ProbeSet& probes, std::size_t upto,
                                  std::size_t window,
                                  const ToleranceConfig& cfg) {
  if (upto < 3) throw Error(ErrorCode::length, "is_cpd_operator needs upto >= 3");
  const auto a = op_moment_sequence(t, upto, window);
  const Eigen::Index rows = a.front().rows();
  CpdOperatorReport rep;
  rep.seed = probes.seed;
  std::optional<Verdict> inconclusive;
  for (std::size_t k = 0; k < probes.probes.size(); ++k) {
    const Vector& raw = probes.probes[k];
    if (raw.size() > rows) {
      throw Error(ErrorCode::window, "probe support exceeds the exact block");
    }
    Vector h = Vector::Zero(rows);
    h.head(raw.size()) = raw;
    ++rep.probes_checked;

    Verdict v = seq::is_cpd_truncated(trajectory(t, h, upto, window), cfg);
    std::string what = "trajectory ||T^n h||^2 not CPD";
    if (!v.fails()) {
      std::vector<double> s(upto + 1);
      for (std::size_t n = 0; n <= upto; ++n) s[n] = h.dot(a[n] * h).real();
      v = seq::is_stieltjes_truncated(seq::RealSequence(std::move(s)), cfg);
      what = "<T*^n B_2 T^n h, h> not a Stieltjes moment sequence";
    }
    if (v.fails()) {
      std::ostringstream os;
      os << what << " for probe " << k;
      rep.verdict = Verdict::fail(Witness{os.str(), to_std(h), v.witness->value},
                                  os.str());
      rep.failing_probe = k;
      return rep;
    }
    if (v.status == Status::inconclusive && !inconclusive) inconclusive = v;
  }
  if (inconclusive) {
    rep.verdict = *inconclusive;
    return rep;
  }
  std::ostringstream os;
  os << "all " << rep.probes_checked << " probes pass (seed " << probes.seed << ")";
  rep.verdict = Verdict::pass(os.str());
  return rep;
}

std::vector<Verdict> hyperexpansive_window(const LinearOperator& t,
                                           std::size_t mmax, std::size_t window,
                                           const ToleranceConfig& cfg) {
  std::vector<Verdict> out;
  for (std::size_t m = 1; m <= mmax; ++m) {
    out.push_back(psd_check(-bracket_bm(t, m, window), cfg.psd_tol,
                            "-B_" + std::to_string(m) + " PSD (window surrogate)"));
  }
  return out;
}

LinearOperator tensor(const LinearOperator& a, const LinearOperator& b) {
  if (!a.is_dense() || !b.is_dense()) {
    throw Error(ErrorCode::unsupported, "tensor product needs dense operators");
  }
  const Matrix& x = a.matrix();
  const Matrix& y = b.matrix();
  Matrix k(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      k.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    }
  }
  return LinearOperator::dense(std::move(k), a.label() + " (x) " + b.label());
}

const char* to_string(LimitKind k) {
  switch (k) {
    case LimitKind::converged: return "converged";
    case LimitKind::converging: return "converging";
    case LimitKind::divergent: return "divergent";
  }
  return "divergent";
}

DifferenceLimit difference_limit(const LinearOperator& t, std::size_t upto,
                                 std::size_t window,
                                 const ToleranceConfig& cfg) {
  if (upto < 2) throw Error(ErrorCode::length, "difference_limit needs upto >= 2");
  const auto imgs = power_images(t, upto + 1, window);
  std::vector<Matrix> g;
  for (const auto& p : imgs) g.push_back(p.adjoint() * p);
  std::vector<Matrix> d;
  for (std::size_t n = 0; n <= upto; ++n) d.push_back(g[n + 1] - g[n]);

  DifferenceLimit out;
  std::vector<Verdict> mono;
  for (std::size_t n = 0; n < upto; ++n) {
    const Matrix inc = d[n + 1] - d[n];
    out.increment_norms.push_back(spectral_norm(inc));
    mono.push_back(psd_check(inc, cfg.psd_tol,
                             "D_" + std::to_string(n + 1) + " - D_" + std::to_string(n)));
  }
  out.monotone = all_of(mono, "D_n monotonically increasing");

  const double scale = std::max(1.0, spectral_norm(d.front()));
  const double last = out.increment_norms.back();
  const double prev = out.increment_norms[out.increment_norms.size() - 2];
  const Matrix last_inc = d[upto] - d[upto - 1];
  if (last <= cfg.rank_tol * scale) {
    out.kind = LimitKind::converged;
    out.estimate = d[upto];
  } else if (prev > 0.0 && last / prev < 1.0 - 1e-6) {
    const double q = last / prev;
    out.kind = LimitKind::converging;
    out.estimate = d[upto] + last_inc * (q / (1.0 - q));
  } else {
    out.kind = LimitKind::divergent;
    out.estimate = d[upto];
    out.divergence_witness = top_direction(last_inc, "direction of non-decaying increments");
  }
  return out;
}

AssociatedShift associated_shift_weights(const LinearOperator& t,
                                         const Vector& h, std::size_t upto,
                                         std::size_t window,
                                         const ToleranceConfig& cfg) {
  if (upto < 4) throw Error(ErrorCode::length, "associated shift needs upto >= 4");
  const auto g = trajectory(t, h, upto, window);
  AssociatedShift out;
  std::vector<double> dg(upto);
  for (std::size_t n = 0; n < upto; ++n) {
    dg[n] = g[n + 1] - g[n];
    out.weights.push_back(std::exp(dg[n] / 2.0));
  }
  const double scale = std::max(1.0, g.sup_norm());
  const double e_last = dg[upto - 1] - dg[upto - 2];
  const double e_prev = dg[upto - 2] - dg[upto - 3];
  const double sup = *std::max_element(dg.begin(), dg.end());
  if (e_last > cfg.rank_tol * scale && e_prev > 0.0 && e_last / e_prev >= 1.0 - 1e-9) {
    out.bounded_on_window = false;
  } else {
    out.bounded_on_window = true;
    double tail = 0.0;
    if (e_last > cfg.rank_tol * scale && e_prev > 0.0) {
      const double q = e_last / e_prev;
      tail = e_last * q / (1.0 - q);
    }
    out.norm_sq_estimate = std::exp(std::max(sup, dg.back() + tail));
  }

  const double max_log = 700.0;
  std::vector<double> mom(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double e = g[n] - g[0];
    if (e > max_log) {
      out.subnormal = Verdict::unknown("exp(gamma_n) overflows on the window");
      return out;
    }
    mom[n] = std::exp(e);
  }
  out.subnormal = seq::is_stieltjes_truncated(seq::RealSequence(std::move(mom)), cfg);
  return out;
}

Verdict complete_hyperexpansive_dual_check(const LinearOperator& t,
                                           const Vector& h, std::size_t upto,
                                           std::size_t window,
                                           const ToleranceConfig& cfg) {
  const auto g = trajectory(t, h, upto, window);
  std::vector<double> mom(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double e = g[0] - g[n];
    if (e > 700.0) return Verdict::unknown("exp(-gamma_n) overflows on the window");
    mom[n] = std::exp(e);
  }
  return seq::is_stieltjes_truncated(seq::RealSequence(std::move(mom)), cfg);
}

SpectralRadius spectral_radius(const LinearOperator& t, std::size_t window) {
  if (t.is_dense()) {
    Eigen::ComplexEigenSolver<Matrix> es(t.matrix());
    return {es.eigenvalues().cwiseAbs().maxCoeff(), false};
  }
  const std::size_t n = std::max<std::size_t>(1, window / (2 * t.bands().power));
  const Eigen::Index rows = t.block_size(window, n);
  Matrix p = Matrix::Identity(rows, rows);
  for (std::size_t k = 0; k < n; ++k) p = t.apply_cols(p, window);
  double r = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    r = std::max(r, std::pow(p.col(j).norm(), 1.0 / static_cast<double>(n)));
  }
  return {r, true};
}

}  // namespace cpd::op
