#include "cpd/calc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpd::calc {

CalculusHandle make_handle(const op::LinearOperator& t, std::size_t upto,
                           std::size_t window, const ToleranceConfig& cfg) {
  rep::MeasureRecovery mr = rep::recover_M(t, upto, window, cfg);
  CalculusHandle h;
  h.M = std::move(mr.M);
  h.moments = std::move(mr.moments);
  h.B2 = h.moments.front();
  h.support = h.M.locations();
  const double gap = spectral_norm(h.B2 - h.M.total());
  const double bound = cfg.rank_tol * std::max(1.0, spectral_norm(h.B2));
  if (gap > bound) {
    std::ostringstream os;
    os << "B_2 differs from total(M) by " << gap;
    throw Error(ErrorCode::inconclusive, os.str());
  }
  return h;
}

CalculusHandle handle_from_measure(const rep::OperatorMeasure& m, std::size_t upto) {
  CalculusHandle h;
  h.M = m;
  h.B2 = m.total();
  h.support = m.locations();
  for (std::size_t n = 0; n <= upto; ++n) h.moments.push_back(m.moment(n));
  return h;
}

Matrix lambda_eval(const CalculusHandle& h, const std::vector<cplx>& f) {
  if (f.size() != h.M.size()) {
    throw Error(ErrorCode::domain, "lambda_eval needs one value per atom");
  }
  Matrix s = Matrix::Zero(h.M.dim(), h.M.dim());
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * h.M.atoms()[k].weight;
  return s;
}

Matrix lambda_eval(const CalculusHandle& h, const std::function<cplx(double)>& f) {
  std::vector<cplx> v;
  for (double x : h.support) v.push_back(f(x));
  return lambda_eval(h, v);
}

LambdaNorm lambda_norm(const CalculusHandle& h, double tol) {
  LambdaNorm out;
  const std::size_t k = h.M.size();
  if (k > 20) throw Error(ErrorCode::unsupported, "too many atoms for sign enumeration");
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    std::vector<cplx> f(k);
    for (std::size_t i = 0; i < k; ++i) f[i] = (mask >> i & 1) ? -1.0 : 1.0;
    out.by_extreme_points = std::max(out.by_extreme_points, spectral_norm(lambda_eval(h, f)));
  }
  out.by_total = spectral_norm(h.M.total());
  out.agree = std::abs(out.by_extreme_points - out.by_total) <= tol;
  return out;
}

namespace {

double sup_on_support(const CalculusHandle& h, const std::function<double(double)>& f) {
  double s = 0.0;
  for (double x : h.support) s = std::max(s, f(x));
  return s;
}

BoundCheck bound_from(double lhs, double rhs, const std::string& what) {
  BoundCheck b{lhs, rhs, {}};
  std::ostringstream os;
  os << what << ": " << lhs << " <= " << rhs;
  b.verdict = lhs <= rhs ? Verdict::pass(os.str())
                         : Verdict::fail(Witness{what, {}, lhs - rhs}, os.str());
  return b;
}

}  // namespace

BoundCheck poly_bound_check(const CalculusHandle& h, const op::Polynomial& q,
                            const ToleranceConfig& cfg) {
  const std::size_t deg = q.degree();
  if (deg >= h.moments.size()) {
    throw Error(ErrorCode::length, "polynomial degree exceeds the available A_n");
  }
  Matrix s = Matrix::Zero(h.B2.rows(), h.B2.cols());
  double mag = 0.0;
  for (std::size_t j = 0; j <= deg; ++j) {
    s += q.coeff(j) * h.moments[j];
    mag += std::abs(q.coeff(j)) * spectral_norm(h.moments[j]);
  }
  const double sup = sup_on_support(h, [&](double x) { return std::abs(q(x)); });
  return bound_from(spectral_norm(s),
                    spectral_norm(h.B2) * sup + cfg.psd_tol * std::max(1.0, mag),
                    "||q(A)|| <= ||B_2|| sup |q|");
}

BoundCheck root_product_check(const CalculusHandle& h, const std::vector<cplx>& roots,
                              const ToleranceConfig& cfg) {
  return poly_bound_check(h, op::Polynomial::from_roots(roots), cfg);
}

BoundCheck bracket_bound_check(const CalculusHandle& h, const op::LinearOperator& t,
                               std::size_t n, std::size_t window,
                               const ToleranceConfig& cfg) {
  const Matrix b = op::bracket_bm(t, n + 2, window);
  const double lhs = spectral_norm(leading(b, std::min(b.rows(), h.B2.rows())));
  const double sup = sup_on_support(
      h, [&](double x) { return std::pow(std::abs(1.0 - x), static_cast<double>(n)); });
  const double rhs = spectral_norm(h.B2) * sup +
                     cfg.psd_tol * std::max(1.0, std::pow(op::op_norm(t, window),
                                                          2.0 * static_cast<double>(n + 2)));
  return bound_from(lhs, rhs, "||B_{n+2}|| <= ||B_2|| sup |1-x|^n");
}

namespace {

SeriesCheck series_verdict(double diff, double tail, double slack, double b2,
                           const std::string& what) {
  SeriesCheck c{diff, tail, {}};
  std::ostringstream os;
  os << what << ": difference " << diff << ", tail bound " << tail;
  const double allowed = tail + slack * std::max(1.0, b2);
  c.verdict = diff <= allowed ? Verdict::pass(os.str())
                              : Verdict::fail(Witness{what, {}, diff - allowed}, os.str());
  return c;
}

}  // namespace

SeriesCheck resolvent_check(const CalculusHandle& h, const rep::Dilation& dil,
                            cplx z, double slack) {
  const double smax = dil.S.size() == 0 ? 0.0 : dil.S.cwiseAbs().maxCoeff();
  const double q = std::abs(z) * smax;
  if (q >= 1.0) {
    throw Error(ErrorCode::domain, "resolvent_check needs |z| sup Omega < 1");
  }
  Matrix lhs = Matrix::Zero(h.B2.rows(), h.B2.cols());
  cplx zn = 1.0;
  for (const Matrix& a : h.moments) {
    lhs += zn * a;
    zn *= z;
  }
  Vector d(dil.S.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = 1.0 / (1.0 - z * dil.S(i));
  const Matrix rhs = dil.R.adjoint() * d.asDiagonal() * dil.R;
  const double b2 = spectral_norm(h.B2);
  const double n1 = static_cast<double>(h.moments.size());
  const double tail = q == 0.0 ? 0.0 : b2 * std::pow(q, n1) / (1.0 - q);
  return series_verdict(spectral_norm(lhs - rhs), tail, slack, b2,
                        "sum z^n A_n = R*(I - zS)^{-1} R");
}

SeriesCheck exponential_check(const CalculusHandle& h, const rep::Dilation& dil,
                              double x, double slack) {
  Matrix lhs = Matrix::Zero(h.B2.rows(), h.B2.cols());
  cplx term = 1.0;
  const cplx ix(0.0, x);
  for (std::size_t n = 0; n < h.moments.size(); ++n) {
    lhs += term * h.moments[n];
    term *= ix / static_cast<double>(n + 1);
  }
  Vector d(dil.S.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = std::exp(ix * dil.S(i));
  const Matrix rhs = dil.R.adjoint() * d.asDiagonal() * dil.R;
  const double smax = dil.S.size() == 0 ? 0.0 : dil.S.cwiseAbs().maxCoeff();
  const double a = std::abs(x) * smax;
  // sum_{n > N} a^n/n! <= a^{N+1}/(N+1)! e^a
  double first = 1.0;
  for (std::size_t n = 1; n <= h.moments.size(); ++n) first *= a / static_cast<double>(n);
  const double b2 = spectral_norm(h.B2);
  SeriesCheck c = series_verdict(spectral_norm(lhs - rhs), b2 * first * std::exp(a),
                                 slack, b2, "sum (ix)^n/n! A_n = R* e^{ixS} R");
  const double rn = spectral_norm(rhs);
  if (c.verdict.holds() && rn > b2 + slack * std::max(1.0, b2)) {
    c.verdict = Verdict::fail(Witness{"||R* e^{ixS} R|| > ||B_2||", {}, rn - b2},
                              "unitary group bound violated");
  }
  return c;
}

IdealGenerator ideal_generator(const CalculusHandle& h, double tol) {
  IdealGenerator g;
  std::vector<cplx> roots;
  for (double x : h.support) roots.emplace_back(x, 0.0);
  g.w = op::Polynomial::from_roots(roots);
  const std::size_t n = roots.size();
  if (h.moments.size() <= n) {
    throw Error(ErrorCode::length, "not enough A_n for the ideal identity");
  }
  double worst_rel = 0.0;
  for (std::size_t k = 0; k + n < h.moments.size(); ++k) {
    Matrix s = Matrix::Zero(h.B2.rows(), h.B2.cols());
    double mag = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
      s += g.w.coeff(j) * h.moments[j + k];
      mag += std::abs(g.w.coeff(j)) * spectral_norm(h.moments[j + k]);
    }
    const double r = spectral_norm(s);
    g.residual = std::max(g.residual, r);
    worst_rel = std::max(worst_rel, r / std::max(1.0, mag));
  }
  std::ostringstream os;
  os << "w_T of degree " << n << ", residual " << g.residual;
  g.verdict = worst_rel <= tol ? Verdict::pass(os.str())
                               : Verdict::fail(Witness{"w_T(A) != 0", {}, g.residual}, os.str());
  return g;
}

}  // namespace cpd::calc
