#pragma once

// Truncated moment problems and the scalar representation theory of CPD
// sequences:
//
//   gamma_n = gamma_0 + b n + c n^2 + sum_k m_k Q_n(x_k)
//
// with (b, c, nu = sum_k m_k delta_{x_k}) the representing triplet.  All
// measures are finitely atomic.

#include "cpd/common.hpp"
#include "cpd/seq.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cpd::moments {

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  // Sorts by location, merges atoms closer than merge_tol (mass-weighted
  // location), drops nonpositive masses.
  explicit AtomicMeasure(std::vector<Atom> atoms, double merge_tol = 0.0);

  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  std::size_t size() const { return atoms_.size(); }

  double moment(std::size_t n) const;
  double total_mass() const;
  // Mass of atoms within tol of x.
  double mass_near(double x, double tol) const;
  AtomicMeasure without_near(double x, double tol) const;
  double max_abs_location() const;

 private:
  std::vector<Atom> atoms_;
};

struct RepresentingTriplet {
  double b = 0.0;
  double c = 0.0;
  AtomicMeasure nu;
};

// Pencil / Prony recovery of a finitely atomic representing measure.
// `scale` sets the absolute floor for the numerical rank (defaults to the
// sup norm of the input); pass the sup norm of the parent sequence when
// recovering the measure of a derived sequence such as Delta^2 gamma.
AtomicMeasure recover_atoms(const seq::RealSequence& s,
                            const ToleranceConfig& cfg,
                            std::optional<double> scale = std::nullopt);

RepresentingTriplet triplet_from_sequence(const seq::RealSequence& s,
                                          const ToleranceConfig& cfg);

seq::RealSequence reconstruct_sequence(const RepresentingTriplet& t,
                                       double gamma0, std::size_t upto);

struct PdDecision {
  Verdict verdict;
  std::optional<AtomicMeasure> mu;  // representing measure when PD
  double delta_one_mass = 0.0;      // gamma0 - sum m/(x-1)^2
};

PdDecision pd_decision(const RepresentingTriplet& t, double gamma0,
                       const ToleranceConfig& cfg);

enum class DifferenceSupport {
  unit_interval,  // supp nu in [0, 1): bounded, monotone differences
  symmetric,      // supp nu in (-1, 1): convergent differences
};

struct DifferencePair {
  double d = 0.0;
  AtomicMeasure nu;
};

struct DifferenceForm {
  Verdict verdict;
  std::optional<DifferencePair> pair;
};

DifferenceForm bounded_difference_form(
    const seq::RealSequence& s, const ToleranceConfig& cfg,
    DifferenceSupport support = DifferenceSupport::unit_interval);

struct ScalingReport {
  std::vector<double> thetas;
  std::vector<Verdict> per_theta;  // CPD of theta^n gamma_n
  Verdict pd;                      // PD of gamma itself
  bool inconsistent = false;
  std::string diagnostic;
  Verdict overall;
};

ScalingReport gyeon_scaling_probe(const seq::RealSequence& s,
                                  std::span<const double> thetas,
                                  const ToleranceConfig& cfg);

struct MonotoneReport {
  Verdict verdict;
  bool differences_to_zero = false;
  bool monotone_decreasing = false;
  bool convergent = false;
  std::optional<Verdict> pd;
};

// For CPD gamma >= 0 with supp nu in R_+: Delta gamma -> 0, gamma decreasing
// and gamma convergent are equivalent, and each forces PD.
MonotoneReport monotone_cpd_check(const seq::RealSequence& s,
                                  const ToleranceConfig& cfg);

}  // namespace cpd::moments
