#pragma once

// Shared vocabulary for the cpd core: tolerances, verdicts, error types and
// the dense matrix aliases used throughout.

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpd {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

struct ToleranceConfig {
  double psd_tol = 1e-9;
  double rank_tol = 1e-8;
  double atom_merge_tol = 1e-6;

  void validate() const;
};

enum class ErrorCode {
  length,        // sequence or window too short for the requested quantity
  domain,        // argument outside the operation's domain
  window,        // banded computation would leave the declared window
  unsupported,   // operation not defined for this operator representation
  refused,       // input fails a precondition that the caller should have checked
  inconclusive,  // numerics could not decide (ill-conditioning, residual)
  parse,         // malformed request
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Status { holds_at_truncation, fails, inconclusive };

const char* to_string(Status s);

// Certificate attached to a failing (or inconclusive) verdict.  `vector` is
// the offending direction: a lambda-vector for Hankel forms, a probe for
// operator tests.
struct Witness {
  std::string description;
  std::vector<cplx> vector;
  double value = 0.0;
};

struct Verdict {
  Status status = Status::inconclusive;
  std::optional<Witness> witness;
  std::string note;

  bool holds() const { return status == Status::holds_at_truncation; }
  bool fails() const { return status == Status::fails; }

  static Verdict pass(std::string note = {});
  static Verdict fail(Witness w, std::string note = {});
  static Verdict unknown(std::string note, std::optional<Witness> w = {});
};

// Conjunction of verdicts: first failure wins (input order), otherwise first
// inconclusive, otherwise holds.
Verdict all_of(const std::vector<Verdict>& vs, const std::string& note = {});

// --- small dense helpers -------------------------------------------------

double spectral_norm(const Matrix& a);

// Hermitian part (A + A*)/2, so that eigen-solvers see exact symmetry.
Matrix hermitian_part(const Matrix& a);

// PSD test: lambda_min(H) >= -psd_tol * max(1, ||H||).  On failure the
// witness carries the eigenvector of the most negative eigenvalue.
Verdict psd_check(const Matrix& h, double psd_tol, const std::string& what);

// Leading principal n-by-n block.
Matrix leading(const Matrix& a, Eigen::Index n);

std::vector<cplx> to_std(const Vector& v);

}  // namespace cpd
