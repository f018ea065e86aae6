#pragma once

// Operators, the hereditary functional calculus p<T> = sum_i a_i T*^i T^i,
// brackets B_m(T) = (1 - X)^m <T>, class predicates and trajectories.
//
// Two representations are supported:
//
//  * dense complex d x d matrices;
//  * banded operators on a direct sum of copies of l^2.  Each slot has basis
//    u_0, u_1, ... and acts as  T u_0 = head u_0 + w(0) u_1,
//    T u_k = w(k) u_{k+1}.  A unilateral weighted shift is one slot with
//    head = 0.  Weights are evaluated lazily and exactly.
//
// For banded operators every computation takes a `window`: the number of
// positions per slot it may touch.  A quantity of hereditary degree k is
// returned on the leading (window - k*power) positions of each slot, where
// it is exact.  Touching position >= window throws ErrorCode::window.
// Vectors and matrices use the interleaved flat index pos * slots + slot, so
// the leading `slots` coordinates are the u_0 vectors.

#include "cpd/common.hpp"
#include "cpd/seq.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cpd::op {

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<cplx> coeffs);

  static Polynomial monomial(std::size_t n, cplx coeff = 1.0);
  static Polynomial one_minus_x_pow(std::size_t m);
  // prod (X - r_i)
  static Polynomial from_roots(const std::vector<cplx>& roots);

  // Degree of the zero polynomial is reported as 0.
  std::size_t degree() const;
  const std::vector<cplx>& coeffs() const { return c_; }
  cplx coeff(std::size_t i) const { return i < c_.size() ? c_[i] : cplx{}; }
  cplx operator()(cplx x) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(cplx s) const;

 private:
  std::vector<cplx> c_;
};

using WeightRule = std::function<double(std::size_t)>;

struct ShiftWeights {
  WeightRule rule;
  std::string description;

  double operator()(std::size_t n) const { return rule(n); }

  static ShiftWeights isometry();
  // sqrt((n+2)/(n+1)): a strict 2-isometry.
  static ShiftWeights two_isometry();
  // sqrt((n+3)/(n+1)): a strict 3-isometry with ker B_2 = {0}.
  static ShiftWeights three_isometry();
  // lambda_0 = sqrt(a), lambda_n = sqrt((1+n(b-1))/(1+(n-1)(b-1))).
  static ShiftWeights wab(double a, double b);
  // Explicit head followed by a constant tail.
  static ShiftWeights explicit_list(std::vector<double> head, double tail);
};

struct BandedSlot {
  double head = 0.0;
  WeightRule weight;
};

struct BandedOperator {
  std::vector<BandedSlot> slots;
  std::size_t power = 1;  // the operator is (base)^power
};

class LinearOperator {
 public:
  static LinearOperator dense(Matrix m, std::string label = "dense");
  static LinearOperator shift(ShiftWeights w);
  static LinearOperator banded(BandedOperator b, std::string label);

  bool is_dense() const { return std::holds_alternative<Matrix>(rep_); }
  const Matrix& matrix() const;
  const BandedOperator& bands() const;
  const std::string& label() const { return label_; }

  // Coordinates per position: 1 for weighted shifts, #slots in general, and
  // d for dense operators (which have a single "position").
  std::size_t slots() const;

  // Flat size of the block on which a degree-k quantity is exact.
  Eigen::Index block_size(std::size_t window, std::size_t degree) const;

  // Exact T h for finitely supported h; the result is one position longer.
  Vector apply(const Vector& h, std::size_t window) const;
  // Columnwise apply.
  Matrix apply_cols(const Matrix& h, std::size_t window) const;

 private:
  std::variant<Matrix, BandedOperator> rep_;
  std::string label_;
};

LinearOperator power(const LinearOperator& t, std::size_t i);

// T^i U for i = 0..degree, where U spans the leading exact block.
std::vector<Matrix> power_images(const LinearOperator& t, std::size_t degree,
                                 std::size_t window);

Matrix hereditary_eval(const Polynomial& p, const LinearOperator& t,
                       std::size_t window);

// sum_i a_i T*^i A T^i (dense operators only).
Matrix nabla_eval(const Polynomial& p, const LinearOperator& t, const Matrix& a);

Matrix bracket_bm(const LinearOperator& t, std::size_t m, std::size_t window);

// Norm of T on the window block (exact for dense, a window-exact lower bound
// for banded operators).
double op_norm(const LinearOperator& t, std::size_t window);

Verdict is_m_isometry(const LinearOperator& t, std::size_t m,
                      std::size_t window, const ToleranceConfig& cfg,
                      bool strict = false);

seq::RealSequence trajectory(const LinearOperator& t, const Vector& h,
                             std::size_t upto, std::size_t window);

// A_n = T*^n B_2(T) T^n, n = 0..upto, via A_{n+1} = T* A_n T.  Banded
// operators return every A_n on the common exact block.
std::vector<Matrix> op_moment_sequence(const LinearOperator& t,
                                       std::size_t upto, std::size_t window);

struct ProbeSet {
  std::vector<Vector> probes;
  std::uint64_t seed = 0;
};

// Canonical basis vectors plus `n_random` seeded random unit vectors, all
// supported on a block of flat size `rows`.
ProbeSet default_probes(const LinearOperator& t, Eigen::Index rows,
                        std::size_t n_random, std::uint64_t seed);

struct CpdOperatorReport {
  Verdict verdict;
  std::size_t probes_checked = 0;
  std::optional<std::size_t> failing_probe;
  std::uint64_t seed = 0;
};

// Flat block on which probes for is_cpd_operator must be supported.
Eigen::Index probe_rows(const LinearOperator& t, std::size_t upto,
                        std::size_t window);

CpdOperatorReport is_cpd_operator(const LinearOperator& t,
                                  const ProbeSet& probes, std::size_t upto,
                                  std::size_t window,
                                  const ToleranceConfig& cfg);

// B_m(T) <= 0 for m = 1..mmax (finite-window surrogate for complete
// hyperexpansivity).
std::vector<Verdict> hyperexpansive_window(const LinearOperator& t,
                                           std::size_t mmax, std::size_t window,
                                           const ToleranceConfig& cfg);

LinearOperator tensor(const LinearOperator& a, const LinearOperator& b);

enum class LimitKind { converged, converging, divergent };

const char* to_string(LimitKind k);

struct DifferenceLimit {
  Verdict monotone;  // D_{n+1} - D_n = A_n >= 0
  LimitKind kind = LimitKind::divergent;
  Matrix estimate;  // D estimate (last iterate plus geometric tail)
  std::vector<double> increment_norms;
  std::optional<Witness> divergence_witness;
};

// D_n = T*^{n+1} T^{n+1} - T*^n T^n, n = 0..upto.
DifferenceLimit difference_limit(const LinearOperator& t, std::size_t upto,
                                 std::size_t window,
                                 const ToleranceConfig& cfg);

struct AssociatedShift {
  std::vector<double> weights;  // exp((gamma_{n+1} - gamma_n)/2)
  bool bounded_on_window = false;
  std::optional<double> norm_sq_estimate;  // exp(sup Delta gamma)
  Verdict subnormal;                       // Stieltjes test of exp(gamma_n)
};

AssociatedShift associated_shift_weights(const LinearOperator& t,
                                         const Vector& h, std::size_t upto,
                                         std::size_t window,
                                         const ToleranceConfig& cfg);

// Subnormality at truncation of the shift with weights
// exp((gamma_n - gamma_{n+1})/2).
Verdict complete_hyperexpansive_dual_check(const LinearOperator& t,
                                           const Vector& h, std::size_t upto,
                                           std::size_t window,
                                           const ToleranceConfig& cfg);

struct SpectralRadius {
  double value = 0.0;
  bool is_estimate = false;
};

SpectralRadius spectral_radius(const LinearOperator& t, std::size_t window);

}  // namespace cpd::op
