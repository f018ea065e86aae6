#pragma once

// Operator-level representation theory: the semispectral measure M with
// T*^n B_2(T) T^n = int x^n dM, the triplet (B, C, F) with
//
//   T*^n T^n = I + n B + n^2 C + int Q_n dF,
//
// the Naimark dilation A_n = R* S^n R, subnormality and the small-support
// classes.  All measures are finitely atomic with matrix weights.

#include "cpd/common.hpp"
#include "cpd/moments.hpp"
#include "cpd/op.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cpd::rep {

struct OpAtom {
  double location = 0.0;
  Matrix weight;  // PSD, dim x dim
};

class OperatorMeasure {
 public:
  explicit OperatorMeasure(Eigen::Index dim = 0) : dim_(dim) {}
  // Sorts by location, merges atoms within merge_tol, drops zero weights and
  // clamps locations in [-merge_tol, 0) to 0.  More negative locations throw.
  OperatorMeasure(Eigen::Index dim, std::vector<OpAtom> atoms,
                  double merge_tol = 0.0);

  Eigen::Index dim() const { return dim_; }
  const std::vector<OpAtom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  std::size_t size() const { return atoms_.size(); }

  Matrix total() const;
  // sum x_k^n W_k
  Matrix moment(std::size_t n) const;
  Matrix weight_near(double x, double tol) const;
  OperatorMeasure without_near(double x, double tol) const;
  double max_location() const;  // 0 for the zero measure
  std::vector<double> locations() const;

 private:
  Eigen::Index dim_ = 0;
  std::vector<OpAtom> atoms_;
};

struct MeasureRecovery {
  OperatorMeasure M;
  std::vector<Matrix> moments;  // A_n used for the fit
  double residual = 0.0;        // max_n ||A_n - sum x^n W||
  double bound = 0.0;           // rank_tol * max_n ||A_n||
};

// Shared atom locations from tr(A_n), matrix weights by least squares,
// PSD projection of each weight.  Throws inconclusive when the residual or
// the projection exceeds its bound.
MeasureRecovery recover_M(const op::LinearOperator& t, std::size_t upto,
                          std::size_t window, const ToleranceConfig& cfg);

struct OperatorTriplet {
  Matrix B;
  Matrix C;
  OperatorMeasure F;
};

OperatorTriplet triplet_from_M(const op::LinearOperator& t,
                               const OperatorMeasure& m, std::size_t window,
                               const ToleranceConfig& cfg);

Matrix reconstruct_gram(const OperatorTriplet& t, std::size_t n);

struct Dilation {
  Matrix R;                           // kappa x dim
  RVector S;                          // diagonal of S, length kappa
  std::vector<std::size_t> atom_map;  // atom index of each row of R
  Eigen::Index kappa() const { return R.rows(); }
  Matrix compress(std::size_t n) const;  // R* S^n R
};

Dilation naimark_dilation(const OperatorMeasure& m, const ToleranceConfig& cfg);

// spectrum(S) = atom locations and ||S|| <= r(T)^2 + slack.
Verdict dilation_spectrum_check(const op::LinearOperator& t,
                                const Dilation& dil, const OperatorMeasure& m,
                                std::size_t window, double slack = 1e-6);

// sum (1 - x_k)^{m-2} W_k
Matrix bm_from_M(const OperatorMeasure& m, std::size_t order);

struct SubnormalityReport {
  Verdict verdict;
  // Some when ||T|| <= 1: a CPD contraction is forced to be subnormal.
  std::optional<bool> contraction_shortcut;
  // Radial pushforward G o phi^{-1}: sum W/(x-1)^2 delta_x + (I - sum) delta_1.
  std::optional<OperatorMeasure> pushforward;
  double integral_gap = 0.0;  // lambda_min(I - sum W/(x-1)^2)
  double b_residual = 0.0;    // ||B - sum W/(x-1)||
};

SubnormalityReport subnormality_decision(const op::LinearOperator& t,
                                         const OperatorTriplet& tr,
                                         std::size_t window,
                                         const ToleranceConfig& cfg);

struct BoundiffReport {
  Verdict verdict;
  std::optional<Matrix> D;
  std::optional<OperatorMeasure> F;
  std::optional<bool> limit_agrees;  // D against difference_limit
  double limit_gap = 0.0;
  bool predicts_unit_spectral_radius = false;  // D != 0 forces r(T) = 1
};

BoundiffReport boundiff_form_operator(const op::LinearOperator& t,
                                      const OperatorTriplet& tr,
                                      std::size_t upto, std::size_t window,
                                      const ToleranceConfig& cfg);

// (x, W) -> (x^i, (1 + x + ... + x^{i-1})^2 W)
OperatorMeasure power_pushforward(const OperatorMeasure& m, std::size_t i,
                                  double merge_tol = 0.0);

enum class SupportClass { isometry_or_2_isometry, three_isometry, kop_2izo, general };

const char* to_string(SupportClass c);

struct Classification {
  SupportClass label = SupportClass::general;
  Verdict cross_check;
  // kop-2izo only: B_1 T = 0 and ||T|| <= 1, which characterizes subnormality
  // inside the class.
  std::optional<bool> subnormal_criterion;
};

Classification classify_small_support(const op::LinearOperator& t,
                                      const OperatorMeasure& m,
                                      std::size_t window,
                                      const ToleranceConfig& cfg);

// B_m(T) T on the exact block (B_m T maps the block into itself).
Matrix bracket_times_t(const op::LinearOperator& t, std::size_t m,
                       std::size_t window);

}  // namespace cpd::rep
