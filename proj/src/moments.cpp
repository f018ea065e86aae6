#include "cpd/moments.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpd::moments {

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms, double merge_tol) {
  std::erase_if(atoms, [](const Atom& a) { return !(a.mass > 0.0); });
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  for (const Atom& a : atoms) {
    if (!atoms_.empty() &&
        std::abs(a.location - atoms_.back().location) <= merge_tol) {
      Atom& last = atoms_.back();
      const double m = last.mass + a.mass;
      last.location = (last.location * last.mass + a.location * a.mass) / m;
      last.mass = m;
    } else {
      atoms_.push_back(a);
    }
  }
}

double AtomicMeasure::moment(std::size_t n) const {
  double s = 0.0;
  for (const Atom& a : atoms_) {
    s += a.mass * std::pow(a.location, static_cast<double>(n));
  }
  return s;
}

double AtomicMeasure::total_mass() const { return moment(0); }

double AtomicMeasure::mass_near(double x, double tol) const {
  double s = 0.0;
  for (const Atom& a : atoms_) {
    if (std::abs(a.location - x) <= tol) s += a.mass;
  }
  return s;
}

AtomicMeasure AtomicMeasure::without_near(double x, double tol) const {
  AtomicMeasure out;
  for (const Atom& a : atoms_) {
    if (std::abs(a.location - x) > tol) out.atoms_.push_back(a);
  }
  return out;
}

double AtomicMeasure::max_abs_location() const {
  double m = 0.0;
  for (const Atom& a : atoms_) m = std::max(m, std::abs(a.location));
  return m;
}

namespace {

// Masses by least squares against the Vandermonde system, rows and columns
// scaled by rho^n so that all entries are O(1).
std::vector<double> fit_masses(const seq::RealSequence& s,
                               const std::vector<double>& locs, double rho) {
  const Eigen::Index rows = static_cast<Eigen::Index>(s.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(locs.size());
  RMatrix v(rows, cols);
  RVector rhs(rows);
  for (Eigen::Index n = 0; n < rows; ++n) {
    const double rn = std::pow(rho, static_cast<double>(n));
    rhs(n) = s[static_cast<std::size_t>(n)] / rn;
    for (Eigen::Index k = 0; k < cols; ++k) {
      v(n, k) = std::pow(locs[static_cast<std::size_t>(k)] / rho,
                         static_cast<double>(n));
    }
  }
  RVector w = v.colPivHouseholderQr().solve(rhs);
  return std::vector<double>(w.data(), w.data() + w.size());
}

// Rough radius of the support: max |gamma_n / gamma_0|^{1/n} over the upper
// half of the window.
double location_scale(const seq::RealSequence& s) {
  const double g0 = std::max(std::abs(s[0]), 1e-300);
  double r = 0.0;
  for (std::size_t n = std::max<std::size_t>(1, s.size() / 2); n < s.size(); ++n) {
    r = std::max(r, std::pow(std::abs(s[n]) / g0, 1.0 / static_cast<double>(n)));
  }
  return r;
}

}  // namespace

AtomicMeasure recover_atoms(const seq::RealSequence& s,
                            const ToleranceConfig& cfg,
                            std::optional<double> scale_opt) {
  cfg.validate();
  if (s.size() < 3) {
    throw Error(ErrorCode::length, "recover_atoms needs N >= 2");
  }
  const double sup = s.sup_norm();
  const double scale = std::max(scale_opt.value_or(sup), sup);
  if (scale == 0.0 || sup <= cfg.rank_tol * scale * 1e-3) return {};

  const Verdict pd = seq::is_pd_truncated(s, cfg);
  if (pd.fails()) {
    throw Error(ErrorCode::refused,
                "recover_atoms: Hankel matrix is not PSD (lambda_min = " +
                    std::to_string(pd.witness->value) + ")");
  }

  const std::size_t m = (s.last() + 1) / 2;
  const double rho = std::max(1.0, location_scale(s));
  RMatrix h0(m, m), h1(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double r = std::pow(rho, static_cast<double>(i + j));
      h0(i, j) = s[i + j] / r;
      h1(i, j) = s[i + j + 1] / (r * rho);
    }
  }

  Eigen::SelfAdjointEigenSolver<RMatrix> es(h0);
  const RVector& lam = es.eigenvalues();
  const double lmax = lam(lam.size() - 1);
  if (!(lmax > 0.0)) return {};
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > cfg.rank_tol * lmax) keep.push_back(i);
  }
  const Eigen::Index r = static_cast<Eigen::Index>(keep.size());
  RMatrix ur(m, r);
  RVector isq(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    ur.col(k) = es.eigenvectors().col(keep[static_cast<std::size_t>(k)]);
    isq(k) = 1.0 / std::sqrt(lam(keep[static_cast<std::size_t>(k)]));
  }
  RMatrix pencil = isq.asDiagonal() * (ur.transpose() * h1 * ur) *
                   isq.asDiagonal();
  pencil = (pencil + pencil.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<RMatrix> ps(pencil);

  std::vector<double> locs;
  for (Eigen::Index k = 0; k < r; ++k) locs.push_back(rho * ps.eigenvalues()(k));
  {
    std::vector<Atom> tmp;
    for (double x : locs) tmp.push_back({x, 1.0});
    AtomicMeasure merged(std::move(tmp), cfg.atom_merge_tol);
    locs.clear();
    for (const Atom& a : merged.atoms()) locs.push_back(a.location);
  }

  std::vector<double> masses = fit_masses(s, locs, rho);
  for (;;) {
    double total = 0.0;
    for (double w : masses) total += std::abs(w);
    auto worst = std::min_element(masses.begin(), masses.end());
    if (worst == masses.end() || *worst >= 0.0) break;
    if (-*worst > cfg.rank_tol * total) {
      std::ostringstream os;
      os << "recover_atoms: negative mass " << *worst << " at location "
         << locs[static_cast<std::size_t>(worst - masses.begin())]
         << " (pencil condition " << lmax / lam(keep.front()) << ")";
      throw Error(ErrorCode::inconclusive, os.str());
    }
    locs.erase(locs.begin() + (worst - masses.begin()));
    masses = locs.empty() ? std::vector<double>{} : fit_masses(s, locs, rho);
  }

  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < locs.size(); ++k) atoms.push_back({locs[k], masses[k]});
  AtomicMeasure mu(std::move(atoms), cfg.atom_merge_tol);

  double resid = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    resid = std::max(resid, std::abs(mu.moment(n) - s[n]));
  }
  if (resid > cfg.rank_tol * scale) {
    std::ostringstream os;
    os << "recover_atoms: moment residual " << resid << " exceeds "
       << cfg.rank_tol * scale << " (rank " << r << " of " << m
       << ", pencil condition " << (r > 0 ? lmax / lam(keep.front()) : 0.0)
       << ")";
    throw Error(ErrorCode::inconclusive, os.str());
  }
  return mu;
}

RepresentingTriplet triplet_from_sequence(const seq::RealSequence& s,
                                          const ToleranceConfig& cfg) {
  const Verdict cpd = seq::is_cpd_truncated(s, cfg);
  if (cpd.fails()) {
    throw Error(ErrorCode::refused,
                "triplet_from_sequence: sequence is not CPD at truncation");
  }
  const AtomicMeasure mu =
      recover_atoms(seq::difference(s, 2), cfg, s.sup_norm());
  const double at_one = mu.mass_near(1.0, cfg.atom_merge_tol);
  RepresentingTriplet t;
  t.c = at_one / 2.0;
  t.b = s[1] - s[0] - at_one / 2.0;
  t.nu = mu.without_near(1.0, cfg.atom_merge_tol);
  return t;
}

seq::RealSequence reconstruct_sequence(const RepresentingTriplet& t,
                                       double gamma0, std::size_t upto) {
  std::vector<double> v(upto + 1);
  for (std::size_t n = 0; n <= upto; ++n) {
    const double nn = static_cast<double>(n);
    double g = gamma0 + t.b * nn + t.c * nn * nn;
    for (const Atom& a : t.nu.atoms()) g += a.mass * seq::q_poly(n, a.location);
    v[n] = g;
  }
  return seq::RealSequence(std::move(v));
}

PdDecision pd_decision(const RepresentingTriplet& t, double gamma0,
                       const ToleranceConfig& cfg) {
  double inv1 = 0.0;  // sum m / (x - 1)
  double inv2 = 0.0;  // sum m / (x - 1)^2
  for (const Atom& a : t.nu.atoms()) {
    const double d = a.location - 1.0;
    if (std::abs(d) <= cfg.atom_merge_tol) {
      throw Error(ErrorCode::domain, "representing triplet has an atom at 1");
    }
    inv1 += a.mass / d;
    inv2 += a.mass / (d * d);
  }
  const double tol =
      cfg.rank_tol *
      std::max({1.0, std::abs(gamma0), std::abs(t.b), t.nu.total_mass(), inv2});

  PdDecision out;
  out.delta_one_mass = gamma0 - inv2;
  if (std::abs(t.c) > tol) {
    out.verdict = Verdict::fail({"c != 0", {}, t.c}, "PD requires c = 0");
    return out;
  }
  if (std::abs(t.b - inv1) > tol) {
    out.verdict = Verdict::fail({"b != sum m/(x-1)", {}, t.b - inv1},
                                "PD requires b = integral of 1/(x-1)");
    return out;
  }
  if (inv2 > gamma0 + tol) {
    out.verdict =
        Verdict::fail({"sum m/(x-1)^2 > gamma0", {}, inv2 - gamma0},
                      "PD requires integral of 1/(x-1)^2 <= gamma0");
    return out;
  }
  std::vector<Atom> atoms;
  for (const Atom& a : t.nu.atoms()) {
    const double d = a.location - 1.0;
    atoms.push_back({a.location, a.mass / (d * d)});
  }
  if (out.delta_one_mass > tol) atoms.push_back({1.0, out.delta_one_mass});
  out.mu = AtomicMeasure(std::move(atoms), cfg.atom_merge_tol);
  out.verdict = Verdict::pass("c = 0, b and gamma0 conditions met");
  return out;
}

DifferenceForm bounded_difference_form(const seq::RealSequence& s,
                                       const ToleranceConfig& cfg,
                                       DifferenceSupport support) {
  const RepresentingTriplet t = triplet_from_sequence(s, cfg);
  const double scale = std::max(1.0, s.sup_norm());
  DifferenceForm out;
  if (std::abs(t.c) > cfg.rank_tol * scale) {
    out.verdict = Verdict::fail({"c != 0", {}, t.c}, "quadratic growth term");
    return out;
  }
  for (const Atom& a : t.nu.atoms()) {
    const bool inside = support == DifferenceSupport::unit_interval
                            ? (a.location >= -cfg.atom_merge_tol && a.location < 1.0)
                            : (a.location > -1.0 && a.location < 1.0);
    if (!inside) {
      out.verdict = Verdict::fail({"atom outside support", {cplx(a.location)}, a.location},
                                  "nu charges a point outside the admissible interval");
      return out;
    }
  }
  DifferencePair pair;
  pair.d = t.b;
  for (const Atom& a : t.nu.atoms()) pair.d += a.mass / (1.0 - a.location);
  pair.nu = t.nu;

  double resid = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double nn = static_cast<double>(n);
    double g = s[0] + nn * pair.d;
    for (const Atom& a : t.nu.atoms()) {
      const double om = 1.0 - a.location;
      g -= a.mass * (1.0 - std::pow(a.location, nn)) / (om * om);
    }
    resid = std::max(resid, std::abs(g - s[n]));
  }
  if (resid > cfg.rank_tol * scale) {
    out.verdict = Verdict::unknown("explicit (d, nu) form residual " +
                                   std::to_string(resid));
    out.pair = std::move(pair);
    return out;
  }
  out.verdict = Verdict::pass("gamma_n = gamma_0 + n d - sum m (1-x^n)/(1-x)^2");
  out.pair = std::move(pair);
  return out;
}

ScalingReport gyeon_scaling_probe(const seq::RealSequence& s,
                                  std::span<const double> thetas,
                                  const ToleranceConfig& cfg) {
  ScalingReport rep;
  rep.pd = seq::is_pd_truncated(s, cfg);
  for (double th : thetas) {
    if (th == 0.0) throw Error(ErrorCode::domain, "scaling theta must be nonzero");
    std::vector<double> v(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) {
      v[n] = std::pow(th, static_cast<double>(n)) * s[n];
    }
    rep.thetas.push_back(th);
    rep.per_theta.push_back(seq::is_cpd_truncated(seq::RealSequence(std::move(v)), cfg));
  }
  bool any_fail = false, all_pass = !rep.per_theta.empty();
  for (const auto& v : rep.per_theta) {
    any_fail = any_fail || v.fails();
    all_pass = all_pass && v.holds();
  }
  if (rep.pd.holds() && any_fail) {
    rep.inconsistent = true;
    rep.diagnostic = "PD at truncation but some scaling fails CPD";
  } else if (rep.pd.fails() && all_pass) {
    rep.inconsistent = true;
    rep.diagnostic =
        "all sampled scalings CPD while gamma fails PD (heuristic at truncation)";
  }
  rep.overall = all_of(rep.per_theta, "theta^n gamma_n CPD for all sampled theta");
  return rep;
}

MonotoneReport monotone_cpd_check(const seq::RealSequence& s,
                                  const ToleranceConfig& cfg) {
  MonotoneReport rep;
  if (!seq::is_cpd_truncated(s, cfg).holds()) {
    rep.verdict = Verdict::unknown("precondition: sequence not CPD at truncation");
    return rep;
  }
  const RepresentingTriplet t = triplet_from_sequence(s, cfg);
  const double scale = std::max(1.0, s.sup_norm());
  const double tol = cfg.rank_tol * scale;
  for (const Atom& a : t.nu.atoms()) {
    if (a.location < -cfg.atom_merge_tol) {
      rep.verdict = Verdict::unknown("precondition: supp nu not in R_+");
      return rep;
    }
  }
  for (std::size_t n = s.size() / 2; n < s.size(); ++n) {
    if (s[n] < -tol) {
      rep.verdict = Verdict::unknown("precondition: gamma negative on window tail");
      return rep;
    }
  }

  // Limits read off the triplet: Delta gamma_n -> d when c = 0 and
  // supp nu in [0, 1), and diverges otherwise.
  const bool bounded_form = std::abs(t.c) <= tol &&
                            std::all_of(t.nu.atoms().begin(), t.nu.atoms().end(),
                                        [](const Atom& a) { return a.location < 1.0; });
  double d = t.b;
  for (const Atom& a : t.nu.atoms()) {
    if (a.location < 1.0) d += a.mass / (1.0 - a.location);
  }
  rep.differences_to_zero = bounded_form && std::abs(d) <= tol;

  rep.monotone_decreasing = true;
  for (std::size_t n = 0; n + 1 < s.size(); ++n) {
    if (s[n + 1] - s[n] > tol) rep.monotone_decreasing = false;
  }

  // Convergent: the tail moves toward the limit gamma_0 - sum m/(1-x)^2.
  rep.convergent = false;
  if (bounded_form && std::abs(d) <= tol) {
    double lim = s[0];
    for (const Atom& a : t.nu.atoms()) {
      const double om = 1.0 - a.location;
      lim -= a.mass / (om * om);
    }
    const std::size_t mid = s.size() / 2;
    rep.convergent =
        std::abs(s[s.last()] - lim) <= std::abs(s[mid] - lim) + tol;
  }

  const bool agree = rep.differences_to_zero == rep.monotone_decreasing &&
                     rep.monotone_decreasing == rep.convergent;
  if (!agree) {
    std::ostringstream os;
    os << "equivalence violated: Delta->0=" << rep.differences_to_zero
       << " decreasing=" << rep.monotone_decreasing
       << " convergent=" << rep.convergent;
    rep.verdict = Verdict::fail({os.str(), {}, 0.0}, os.str());
    return rep;
  }
  if (!rep.differences_to_zero) {
    rep.verdict = Verdict::pass("conditions fail consistently");
    return rep;
  }
  rep.pd = seq::is_pd_truncated(s, cfg);
  if (rep.pd->fails()) {
    Verdict v = *rep.pd;
    v.note = "monotone CPD sequence expected PD";
    rep.verdict = v;
    return rep;
  }
  rep.verdict = Verdict::pass("decreasing, convergent, Delta->0 and PD");
  return rep;
}

}  // namespace cpd::moments
