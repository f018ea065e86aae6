#include "cpd/seq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cpd::seq {

RealSequence::RealSequence(std::vector<double> values)
    : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::domain,
                  "sequence value at index " + std::to_string(i) +
                      " is not finite");
    }
  }
}

double RealSequence::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

RealSequence difference(const RealSequence& s, std::size_t k) {
  if (s.size() == 0 || k > s.last()) {
    throw Error(ErrorCode::length, "difference order exceeds truncation");
  }
  std::vector<double> v(s.values().begin(), s.values().end());
  for (std::size_t step = 0; step < k; ++step) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = v[i + 1] - v[i];
    v.pop_back();
  }
  return RealSequence(std::move(v));
}

double q_poly(std::size_t n, double x) {
  if (n < 2) return 0.0;
  // The closed form cancels badly near 1 (about eps/(x-1)^2 relative), so
  // the finite sum is used on a wider band than the singularity needs.
  if (std::abs(x - 1.0) < 0.25) {
    // sum_{j=0}^{n-2} (n-j-1) x^j by Horner, highest power first.
    double acc = 0.0;
    for (std::size_t j = n - 1; j-- > 0;) {
      acc = acc * x + static_cast<double>(n - j - 1);
    }
    return acc;
  }
  const double d = x - 1.0;
  const double nn = static_cast<double>(n);
  return (std::pow(x, nn) - 1.0 - nn * d) / (d * d);
}

RMatrix hankel(const RealSequence& s, std::size_t shift) {
  if (s.size() < shift + 1) {
    throw Error(ErrorCode::length, "sequence too short for Hankel shift " +
                                       std::to_string(shift));
  }
  // largest m with 2(m-1) + shift <= N
  const std::size_t m = (s.last() - shift) / 2 + 1;
  RMatrix h(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) h(i, j) = s[i + j + shift];
  }
  return h;
}

namespace {

void require_last(const RealSequence& s, std::size_t n, const char* op) {
  if (s.size() == 0 || s.last() < n) {
    throw Error(ErrorCode::length, std::string(op) + " needs N >= " +
                                       std::to_string(n));
  }
}

Verdict hankel_psd(const RealSequence& s, std::size_t shift,
                   const ToleranceConfig& cfg, const std::string& what) {
  return psd_check(hankel(s, shift).cast<cplx>(), cfg.psd_tol, what);
}

}  // namespace

Verdict is_pd_truncated(const RealSequence& s, const ToleranceConfig& cfg) {
  require_last(s, 2, "is_pd_truncated");
  return hankel_psd(s, 0, cfg, "Hankel(gamma) PSD");
}

Verdict is_cpd_truncated(const RealSequence& s, const ToleranceConfig& cfg) {
  require_last(s, 2, "is_cpd_truncated");
  Verdict v = hankel_psd(difference(s, 2), 0, cfg, "Hankel(Delta^2 gamma) PSD");
  if (v.fails()) {
    // Lift the eigenvector to the zero-sum lambda = B v of the original form.
    const auto& e = v.witness->vector;
    std::vector<cplx> lambda(e.size() + 1, cplx{});
    for (std::size_t i = 0; i < e.size(); ++i) {
      lambda[i] += e[i];
      lambda[i + 1] -= e[i];
    }
    v.witness->vector = std::move(lambda);
    v.witness->description =
        "zero-sum lambda with negative quadratic form sum gamma_{i+j} "
        "lambda_i conj(lambda_j)";
  }
  return v;
}

Verdict is_stieltjes_truncated(const RealSequence& s,
                               const ToleranceConfig& cfg) {
  require_last(s, 3, "is_stieltjes_truncated");
  return all_of({hankel_psd(s, 0, cfg, "Hankel shift 0 PSD"),
                 hankel_psd(s, 1, cfg, "Hankel shift 1 PSD")});
}

Verdict schoenberg_probe(const RealSequence& s, std::span<const double> ts,
                         const ToleranceConfig& cfg) {
  require_last(s, 2, "schoenberg_probe");
  const double max_log = std::log(std::numeric_limits<double>::max()) - 1.0;
  bool overflow = false;
  double overflow_t = 0.0;
  for (double t : ts) {
    if (!(t > 0.0)) throw Error(ErrorCode::domain, "schoenberg t must be > 0");
    std::vector<double> e(s.size());
    bool bad = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double arg = t * s[i];
      if (arg > max_log) {
        bad = true;
        break;
      }
      e[i] = std::exp(arg);
    }
    if (bad) {
      overflow = true;
      overflow_t = t;
      continue;
    }
    Verdict v = is_pd_truncated(RealSequence(std::move(e)), cfg);
    if (v.fails()) {
      std::ostringstream os;
      os << "exp(t*gamma) not PD at t=" << t;
      v.witness->description = os.str();
      v.note = os.str();
      return v;
    }
  }
  if (overflow) {
    std::ostringstream os;
    os << "exp(t*gamma) overflows at t=" << overflow_t;
    return Verdict::unknown(os.str());
  }
  return Verdict::pass("exp(t*gamma) PD at every sampled t");
}

GrowthEstimate growth_rate(const RealSequence& s) {
  require_last(s, 4, "growth_rate");
  const std::size_t n_max = s.last();
  const std::size_t n_min = std::max<std::size_t>(1, (n_max + 1) / 2);
  double root = 0.0;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    root = std::max(root, std::pow(std::abs(s[n]), 1.0 / static_cast<double>(n)));
  }
  // The root estimate is biased low by mass^(1/n); the last ratio is not.
  double ratio = 0.0;
  if (s[n_max - 1] != 0.0) ratio = std::abs(s[n_max] / s[n_max - 1]);
  std::ostringstream os;
  os << "max of |gamma_n|^(1/n), n in [" << n_min << ", " << n_max << "] (" << root
     << ") and |gamma_N/gamma_(N-1)| (" << ratio << ")";
  return GrowthEstimate{std::max(root, ratio), true, os.str()};
}

}  // namespace cpd::seq
