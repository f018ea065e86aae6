#include "cpd/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cpd {

void ToleranceConfig::validate() const {
  if (!(psd_tol > 0.0) || !(rank_tol > 0.0) || !(atom_merge_tol > 0.0)) {
    throw Error(ErrorCode::domain, "tolerances must be strictly positive");
  }
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::length: return "length";
    case ErrorCode::domain: return "domain";
    case ErrorCode::window: return "window";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::refused: return "refused";
    case ErrorCode::inconclusive: return "inconclusive";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

const char* to_string(Status s) {
  switch (s) {
    case Status::holds_at_truncation: return "holds_at_truncation";
    case Status::fails: return "fails";
    case Status::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict Verdict::pass(std::string note) {
  return Verdict{Status::holds_at_truncation, std::nullopt, std::move(note)};
}

Verdict Verdict::fail(Witness w, std::string note) {
  return Verdict{Status::fails, std::move(w), std::move(note)};
}

Verdict Verdict::unknown(std::string note, std::optional<Witness> w) {
  return Verdict{Status::inconclusive, std::move(w), std::move(note)};
}

Verdict all_of(const std::vector<Verdict>& vs, const std::string& note) {
  for (const auto& v : vs) {
    if (v.fails()) {
      Verdict out = v;
      if (!note.empty()) out.note = note + ": " + v.note;
      return out;
    }
  }
  for (const auto& v : vs) {
    if (v.status == Status::inconclusive) {
      Verdict out = v;
      if (!note.empty()) out.note = note + ": " + v.note;
      return out;
    }
  }
  return Verdict::pass(note);
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

Matrix hermitian_part(const Matrix& a) { return (a + a.adjoint()) / 2.0; }

Verdict psd_check(const Matrix& h, double psd_tol, const std::string& what) {
  if (h.size() == 0) return Verdict::pass(what + ": empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  const RVector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  const double lmin = ev(0);
  if (lmin >= -psd_tol * scale) return Verdict::pass(what);
  Witness w;
  w.description = what + ": negative eigenvalue";
  w.value = lmin;
  w.vector = to_std(es.eigenvectors().col(0));
  return Verdict::fail(std::move(w), what);
}

Matrix leading(const Matrix& a, Eigen::Index n) {
  if (n > a.rows() || n > a.cols()) {
    throw Error(ErrorCode::length, "leading block larger than matrix");
  }
  return a.topLeftCorner(n, n);
}

std::vector<cplx> to_std(const Vector& v) {
  return std::vector<cplx>(v.data(), v.data() + v.size());
}

}  // namespace cpd
