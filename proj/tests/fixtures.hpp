#pragma once

// Operators of the example gallery, rebuilt directly so the tests do not go
// through request parsing.

#include "cpd/op.hpp"
#include "cpd/qclass.hpp"
#include "oracles.hpp"

#include <string>
#include <vector>

namespace fixtures {

using cpd::Matrix;
using cpd::op::LinearOperator;
using cpd::op::ShiftWeights;

struct Fixture {
  std::string name;
  LinearOperator op;
  std::size_t upto;
  std::size_t window;
};

inline Matrix jordan() {
  Matrix m(2, 2);
  m << 1, 1, 0, 1;
  return m;
}

inline Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Gallery operators that pass the CPD test.
inline std::vector<Fixture> cpd_operators() {
  const std::size_t w = 32, n = 24;
  return {
      {"isometry", LinearOperator::shift(ShiftWeights::isometry()), n, w},
      {"twoiso", LinearOperator::shift(ShiftWeights::two_isometry()), n, w},
      {"at91shift", LinearOperator::shift(ShiftWeights::three_isometry()), n, w},
      {"wab", LinearOperator::shift(ShiftWeights::wab(4.0, 2.0)), n, w},
      {"wa1", LinearOperator::shift(ShiftWeights::wab(0.25, 1.0)), n, w},
      {"waa", LinearOperator::shift(ShiftWeights::wab(2.0, 2.0)), n, w},
      {"nilpotent3iso", LinearOperator::dense(jordan(), "jordan"), n, 0},
      {"diagsub", LinearOperator::dense(diag2(0.3, 0.9), "diag"), n, 0},
      {"qclass_disk", cpd::qclass::build_qclass({0.6}, {0.7}).op, 12, 20},
      {"qclass_strip", cpd::qclass::build_qclass({1.5}, {7.0}).op, 12, 20},
  };
}

// Truncated matrix of a banded operator on `positions` positions per slot,
// flat index pos * slots + slot.  Leading blocks of T*^n X T^n are exact
// while they stay n positions short of the edge.
inline Matrix banded_matrix(const LinearOperator& t, std::size_t positions) {
  const auto& b = t.bands();
  const std::size_t s = b.slots.size();
  const Eigen::Index d = static_cast<Eigen::Index>(positions * s);
  Matrix base = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < s; ++j) {
    const auto& slot = b.slots[j];
    base(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = slot.head;
    for (std::size_t k = 0; k + 1 < positions; ++k) {
      base(static_cast<Eigen::Index>((k + 1) * s + j), static_cast<Eigen::Index>(k * s + j)) =
          slot.weight(k);
    }
  }
  return oracle::mpow(base, b.power);
}

// Matrix of T large enough for products up to `degree` on `rows` rows.
inline Matrix oracle_matrix(const Fixture& f, std::size_t extra = 64) {
  if (f.op.is_dense()) return f.op.matrix();
  return banded_matrix(f.op, f.window + extra);
}

}  // namespace fixtures
