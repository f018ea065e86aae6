#pragma once

// Scalar sequence primitives: differences, the Q_n kernel polynomials,
// Hankel matrices and truncated PD / CPD / Stieltjes verdicts.
//
// Every verdict here is about a finite window gamma_0..gamma_N.  A passing
// verdict is reported as Status::holds_at_truncation: it is necessary for the
// property of the infinite sequence, never sufficient.

#include "cpd/common.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cpd::seq {

inline constexpr std::size_t kDefaultTruncation = 24;

class RealSequence {
 public:
  RealSequence() = default;
  explicit RealSequence(std::vector<double> values);

  // Samples rule(0..n) inclusive.
  template <class F>
  static RealSequence from_rule(F&& rule, std::size_t n = kDefaultTruncation) {
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) v[i] = rule(i);
    return RealSequence(std::move(v));
  }

  std::size_t size() const { return values_.size(); }
  // Truncation index N (last available index).
  std::size_t last() const { return values_.empty() ? 0 : values_.size() - 1; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  double sup_norm() const;

 private:
  std::vector<double> values_;
};

// Delta^k gamma, (Delta gamma)_n = gamma_{n+1} - gamma_n.
RealSequence difference(const RealSequence& s, std::size_t k);

double q_poly(std::size_t n, double x);

// H_ij = gamma_{i+j+shift}, the largest square matrix the window supports.
RMatrix hankel(const RealSequence& s, std::size_t shift);

Verdict is_pd_truncated(const RealSequence& s, const ToleranceConfig& cfg);
Verdict is_cpd_truncated(const RealSequence& s, const ToleranceConfig& cfg);
Verdict is_stieltjes_truncated(const RealSequence& s,
                               const ToleranceConfig& cfg);

// Samples the exponential criterion: gamma is CPD iff exp(t*gamma) is PD for
// every t > 0.  Only a refutation is definitive.
Verdict schoenberg_probe(const RealSequence& s, std::span<const double> ts,
                         const ToleranceConfig& cfg);

struct GrowthEstimate {
  double value = 0.0;
  bool is_estimate = true;  // limsup is not computable from a window
  std::string quality;
};

// max of |gamma_n|^{1/n} over the upper half of the window and the last
// ratio |gamma_N / gamma_{N-1}|.
GrowthEstimate growth_rate(const RealSequence& s);

}  // namespace cpd::seq
