#pragma once

// Class-Q block operators T = [[V, E], [0, Q]] on H1 (+) H2 with V an
// isometry, V*E = 0, Q normal and Q |E|^2 = |E|^2 Q.  Built from joint
// eigenvalue pairs (s_j, t_j) of (|Q|, |E|): slot j of a banded operator has
// head s_j, first weight t_j and unit weights afterwards, so u_0 of slot j
// spans the j-th direction of H2 and the rest of the slot is a plain
// unilateral shift.  The H2 coordinates are the first d flat indices.
//
// Only finite joint spectra are constructed.  Commuting positive matrices
// |Q|, |E| are first reduced to their joint eigenvalue pairs.

#include "cpd/common.hpp"
#include "cpd/op.hpp"
#include "cpd/rep.hpp"

#include <vector>

namespace cpd::qclass {

struct QBlockOperator {
  std::vector<double> s;  // spectrum of |Q|
  std::vector<double> t;  // spectrum of |E|
  op::LinearOperator op;
  std::size_t d() const { return s.size(); }
};

inline constexpr std::size_t kDefaultWindow = 8;

QBlockOperator build_qclass(std::vector<double> s, std::vector<double> t);

struct JointSpectrum {
  std::vector<double> s;  // eigenvalues of |Q|
  std::vector<double> t;  // matching eigenvalues of |E|
  Matrix U;               // common eigenvectors, columns in pair order
};

// Simultaneous diagonalization of commuting positive semidefinite matrices.
// Throws domain if they are not Hermitian, not PSD or do not commute
// (relative tolerance tol).
JointSpectrum joint_spectrum(const Matrix& abs_q, const Matrix& abs_e, double tol = 1e-10);

QBlockOperator build_qclass_from_matrices(const Matrix& abs_q, const Matrix& abs_e, double tol = 1e-10);

// V*V = I, V*E = 0, Q|E|^2 = |E|^2 Q, QQ*Q = Q*QQ and T(H1) in H1, read off
// the banded operator on the window.
Verdict validate_block_form(const QBlockOperator& q, std::size_t window = kDefaultWindow);

bool in_cpd_region(double s, double t, double tol = 0.0);
bool in_subnormal_region(double s, double t, double tol = 0.0);

// A_j = (1 - s_j^2 - t_j^2)(1 - s_j^2)
std::vector<double> a_values(const QBlockOperator& q);

struct QCpdReport {
  Verdict verdict;
  bool region = false;    // every pair in the CPD region
  Verdict b2;             // B_2 >= 0
  Verdict b4;             // B_4 >= 0
  std::vector<std::size_t> outside;  // pairs outside the region
};

QCpdReport qclass_cpd_test(const QBlockOperator& q, const ToleranceConfig& cfg,
                           std::size_t window = kDefaultWindow);

// Largest deviation of the leading d x d block of B_2 from diag(A).
double a_formula_gap(const QBlockOperator& q, std::size_t window = kDefaultWindow);

struct QMeasure {
  rep::OperatorMeasure M;
  Verdict a_psd;
};

// Atoms at the distinct s_j^2 with weight sqrt(A) P sqrt(A) in the leading
// block of a dim x dim space (0 elsewhere).
QMeasure qclass_M(const QBlockOperator& q, Eigen::Index dim, const ToleranceConfig& cfg);

struct QSubnormalReport {
  Verdict verdict;
  std::vector<std::size_t> gap;  // CPD region but not subnormal region
};

QSubnormalReport qclass_subnormal_region(const QBlockOperator& q);

}  // namespace cpd::qclass
