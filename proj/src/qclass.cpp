#include "cpd/qclass.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpd::qclass {

QBlockOperator build_qclass(std::vector<double> s, std::vector<double> t) {
  if (s.size() != t.size() || s.empty()) {
    throw Error(ErrorCode::domain, "qclass needs equal nonempty s and t lists");
  }
  op::BandedOperator b;
  std::ostringstream label;
  label << "class Q, pairs";
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (!(s[j] >= 0.0) || !(t[j] >= 0.0) || !std::isfinite(s[j]) || !std::isfinite(t[j])) {
      throw Error(ErrorCode::domain, "qclass pairs must be finite and nonnegative");
    }
    const double tj = t[j];
    b.slots.push_back({s[j], [tj](std::size_t k) { return k == 0 ? tj : 1.0; }});
    label << " (" << s[j] << ", " << t[j] << ")";
  }
  op::LinearOperator lo = op::LinearOperator::banded(std::move(b), label.str());
  return QBlockOperator{std::move(s), std::move(t), std::move(lo)};
}

JointSpectrum joint_spectrum(const Matrix& abs_q, const Matrix& abs_e, double tol) {
  const Eigen::Index d = abs_q.rows();
  if (d == 0 || abs_q.cols() != d || abs_e.rows() != d || abs_e.cols() != d) {
    throw Error(ErrorCode::domain, "|Q| and |E| must be square of the same size");
  }
  const double scale = std::max({1.0, spectral_norm(abs_q), spectral_norm(abs_e)});
  if (spectral_norm(abs_q - abs_q.adjoint()) > tol * scale ||
      spectral_norm(abs_e - abs_e.adjoint()) > tol * scale) {
    throw Error(ErrorCode::domain, "|Q| and |E| must be Hermitian");
  }
  if (spectral_norm(abs_q * abs_e - abs_e * abs_q) > tol * scale * scale) {
    throw Error(ErrorCode::domain, "|Q| and |E| do not commute");
  }
  // Eigenspaces of |Q| first, then |E| compressed to each of them.
  Eigen::SelfAdjointEigenSolver<Matrix> qs(hermitian_part(abs_q));
  const RVector& qv = qs.eigenvalues();
  JointSpectrum out;
  out.U = Matrix(d, d);
  Eigen::Index start = 0;
  while (start < d) {
    Eigen::Index end = start + 1;
    while (end < d && qv(end) - qv(end - 1) <= tol * scale) ++end;
    const Matrix basis = qs.eigenvectors().middleCols(start, end - start);
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(basis.adjoint() * abs_e * basis));
    out.U.middleCols(start, end - start) = basis * es.eigenvectors();
    for (Eigen::Index k = 0; k < end - start; ++k) {
      out.s.push_back(qv(start + k));
      out.t.push_back(es.eigenvalues()(k));
    }
    start = end;
  }
  for (std::size_t j = 0; j < out.s.size(); ++j) {
    for (double* x : {&out.s[j], &out.t[j]}) {
      if (*x < -tol * scale) throw Error(ErrorCode::domain, "|Q| and |E| must be PSD");
      *x = std::max(0.0, *x);
    }
  }
  return out;
}

QBlockOperator build_qclass_from_matrices(const Matrix& abs_q, const Matrix& abs_e, double tol) {
  JointSpectrum j = joint_spectrum(abs_q, abs_e, tol);
  return build_qclass(std::move(j.s), std::move(j.t));
}

Verdict validate_block_form(const QBlockOperator& q, std::size_t window) {
  const Eigen::Index d = static_cast<Eigen::Index>(q.d());
  const Eigen::Index rows = q.op.block_size(window, 1);
  const Matrix img = q.op.apply_cols(Matrix::Identity(rows, rows), window);
  const Eigen::Index h1_rows = img.rows() - d;
  const Eigen::Index h1_cols = rows - d;
  const Matrix qm = img.topLeftCorner(d, d);
  const Matrix lower = img.topRightCorner(d, h1_cols);  // H1 -> H2 part, must be 0
  const Matrix e = img.bottomLeftCorner(h1_rows, d);
  const Matrix v = img.bottomRightCorner(h1_rows, h1_cols);
  const Matrix e2 = e.adjoint() * e;

  struct Item {
    const char* what;
    double value;
  };
  const Item items[] = {
      {"T(H1) in H1", lower.norm()},
      {"V*V = I", (v.adjoint() * v - Matrix::Identity(h1_cols, h1_cols)).norm()},
      {"V*E = 0", (v.adjoint() * e).norm()},
      {"Q|E|^2 = |E|^2 Q", (qm * e2 - e2 * qm).norm()},
      {"Q normal", (qm * qm.adjoint() * qm - qm.adjoint() * qm * qm).norm()},
  };
  for (const Item& it : items) {
    if (it.value != 0.0) {
      return Verdict::fail(Witness{it.what, {}, it.value}, std::string(it.what) + " violated");
    }
  }
  return Verdict::pass("block form identities hold exactly on the window");
}

bool in_cpd_region(double s, double t, double tol) {
  return s * s + t * t <= 1.0 + tol || s >= 1.0 - tol;
}

bool in_subnormal_region(double s, double t, double tol) {
  return s * s + t * t <= 1.0 + tol || (s >= 1.0 - tol && t <= tol);
}

std::vector<double> a_values(const QBlockOperator& q) {
  std::vector<double> a;
  for (std::size_t j = 0; j < q.d(); ++j) {
    const double s2 = q.s[j] * q.s[j];
    a.push_back((1.0 - s2 - q.t[j] * q.t[j]) * (1.0 - s2));
  }
  return a;
}

QCpdReport qclass_cpd_test(const QBlockOperator& q, const ToleranceConfig& cfg,
                           std::size_t window) {
  const Verdict form = validate_block_form(q, window);
  if (form.fails()) throw Error(ErrorCode::refused, "qclass: " + form.note);
  QCpdReport rep;
  for (std::size_t j = 0; j < q.d(); ++j) {
    if (!in_cpd_region(q.s[j], q.t[j])) rep.outside.push_back(j);
  }
  rep.region = rep.outside.empty();
  rep.b2 = psd_check(op::bracket_bm(q.op, 2, window), cfg.psd_tol, "B_2 >= 0");
  rep.b4 = psd_check(op::bracket_bm(q.op, 4, window), cfg.psd_tol, "B_4 >= 0");
  const bool brackets = rep.b2.holds() && rep.b4.holds();
  if (rep.region != brackets) {
    std::ostringstream os;
    os << "routes disagree: region " << (rep.region ? "in" : "out") << ", B_2 "
       << to_string(rep.b2.status) << ", B_4 " << to_string(rep.b4.status);
    rep.verdict = Verdict::unknown(os.str());
  } else if (rep.region) {
    rep.verdict = Verdict::pass("joint spectrum in the CPD region; B_2, B_4 >= 0");
  } else {
    const std::size_t j = rep.outside.front();
    std::ostringstream os;
    os << "pair " << j << " (" << q.s[j] << ", " << q.t[j] << ") outside the CPD region";
    Witness w = rep.b2.fails() ? *rep.b2.witness : *rep.b4.witness;
    w.description = os.str();
    rep.verdict = Verdict::fail(std::move(w), os.str());
  }
  return rep;
}

double a_formula_gap(const QBlockOperator& q, std::size_t window) {
  const Eigen::Index d = static_cast<Eigen::Index>(q.d());
  const Matrix b2 = leading(op::bracket_bm(q.op, 2, window), d);
  const std::vector<double> a = a_values(q);
  Matrix diff = b2;
  for (Eigen::Index j = 0; j < d; ++j) diff(j, j) -= a[static_cast<std::size_t>(j)];
  return diff.cwiseAbs().maxCoeff();
}

QMeasure qclass_M(const QBlockOperator& q, Eigen::Index dim, const ToleranceConfig& cfg) {
  const Eigen::Index d = static_cast<Eigen::Index>(q.d());
  if (dim < d) throw Error(ErrorCode::domain, "qclass_M dimension below d");
  const std::vector<double> a = a_values(q);
  QMeasure out;
  std::vector<std::size_t> negative;
  std::vector<rep::OpAtom> atoms;
  for (Eigen::Index j = 0; j < d; ++j) {
    double aj = a[static_cast<std::size_t>(j)];
    const double tol = cfg.psd_tol * std::max(1.0, std::abs(aj));
    if (aj < -tol) negative.push_back(static_cast<std::size_t>(j));
    aj = std::max(0.0, aj);
    Matrix w = Matrix::Zero(dim, dim);
    w(j, j) = aj;
    const double sj = q.s[static_cast<std::size_t>(j)];
    atoms.push_back({sj * sj, std::move(w)});
  }
  out.M = rep::OperatorMeasure(dim, std::move(atoms), 0.0);
  if (negative.empty()) {
    out.a_psd = Verdict::pass("A >= 0");
  } else {
    const std::size_t j = negative.front();
    std::ostringstream os;
    os << "A has negative entry " << a[j] << " at pair " << j;
    out.a_psd = Verdict::unknown(os.str(), Witness{os.str(), {}, a[j]});
  }
  return out;
}

QSubnormalReport qclass_subnormal_region(const QBlockOperator& q) {
  QSubnormalReport rep;
  std::vector<std::size_t> outside;
  for (std::size_t j = 0; j < q.d(); ++j) {
    if (in_subnormal_region(q.s[j], q.t[j])) continue;
    outside.push_back(j);
    if (in_cpd_region(q.s[j], q.t[j])) rep.gap.push_back(j);
  }
  if (outside.empty()) {
    rep.verdict = Verdict::pass("joint spectrum in the subnormal region");
  } else {
    const std::size_t j = outside.front();
    std::ostringstream os;
    os << "pair " << j << " (" << q.s[j] << ", " << q.t[j] << ") outside the subnormal region";
    rep.verdict = Verdict::fail(Witness{os.str(), {}, q.t[j]}, os.str());
  }
  return rep;
}

}  // namespace cpd::qclass
