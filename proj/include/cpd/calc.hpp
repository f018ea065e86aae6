#pragma once

// The functional calculus Lambda_T(f) = int f dM for atomic M, its norm,
// polynomial and analytic inequalities, and the annihilating polynomial of
// the sequence A_n.

#include "cpd/common.hpp"
#include "cpd/op.hpp"
#include "cpd/rep.hpp"

#include <functional>
#include <vector>

namespace cpd::calc {

struct CalculusHandle {
  rep::OperatorMeasure M;
  Matrix B2;
  std::vector<double> support;  // sorted atom locations
  std::vector<Matrix> moments;  // A_n computed from T, n = 0..upto
};

// Recovers M from T and checks B_2 = total(M).
CalculusHandle make_handle(const op::LinearOperator& t, std::size_t upto,
                           std::size_t window, const ToleranceConfig& cfg);

// Handle built from a known measure; A_n are taken as its moments.
CalculusHandle handle_from_measure(const rep::OperatorMeasure& m, std::size_t upto);

// f sampled at the atoms, in support order.
Matrix lambda_eval(const CalculusHandle& h, const std::vector<cplx>& f);
Matrix lambda_eval(const CalculusHandle& h, const std::function<cplx(double)>& f);

struct LambdaNorm {
  double by_extreme_points = 0.0;  // max over sign patterns f in {-1, 1}^atoms
  double by_total = 0.0;           // ||total(M)||
  bool agree = false;
};

LambdaNorm lambda_norm(const CalculusHandle& h, double tol = 1e-10);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  Verdict verdict;
};

// ||sum a_j A_j|| <= ||B_2|| sup_Omega |q| + psd_tol
BoundCheck poly_bound_check(const CalculusHandle& h, const op::Polynomial& q,
                            const ToleranceConfig& cfg);

// Same bound for q = prod (X - z_i).
BoundCheck root_product_check(const CalculusHandle& h, const std::vector<cplx>& roots,
                              const ToleranceConfig& cfg);

// ||B_{n+2}(T)|| <= ||B_2|| sup_Omega |1 - x|^n, with B_{n+2} computed from T.
BoundCheck bracket_bound_check(const CalculusHandle& h, const op::LinearOperator& t,
                               std::size_t n, std::size_t window,
                               const ToleranceConfig& cfg);

struct SeriesCheck {
  double difference = 0.0;
  double tail_bound = 0.0;
  Verdict verdict;
};

// sum_{n <= N} z^n A_n against R* (I - z S)^{-1} R, for |z| sup Omega < 1.
SeriesCheck resolvent_check(const CalculusHandle& h, const rep::Dilation& dil,
                            cplx z, double slack = 1e-8);

// sum_{n <= N} (ix)^n/n! A_n against R* e^{ixS} R, and ||R* e^{ixS} R|| <= ||B_2||.
SeriesCheck exponential_check(const CalculusHandle& h, const rep::Dilation& dil,
                              double x, double slack = 1e-8);

struct IdealGenerator {
  op::Polynomial w;   // prod (X - u) over distinct atoms; 1 if M = 0
  double residual = 0.0;  // max_k ||sum_j c_j A_{j+k}||
  Verdict verdict;
};

IdealGenerator ideal_generator(const CalculusHandle& h, double tol = 1e-9);

}  // namespace cpd::calc
