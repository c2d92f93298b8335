// expm.hpp — action of the exponential of a sparse generator on a vector.

#pragma once

#include "thirdq/types.hpp"

#include <cmath>

namespace thirdq {

inline double norm1(const SpMat& A) {
  double best = 0.0;
  for (Eigen::Index c = 0; c < A.outerSize(); ++c) {
    double col = 0.0;
    for (SpMat::InnerIterator it(A, c); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

// exp(t A) v by scaled Taylor series: t is split into s substeps with ‖A‖₁·t/s ≤ 2,
// each expanded until two consecutive terms fall below tol·‖partial sum‖.
inline CVec expm_multiply(const SpMat& A, CVec v, double t, double tol = 1e-15, double norm_A = -1.0) {
  if (t == 0.0) return v;
  if (norm_A < 0.0) norm_A = norm1(A);
  const double theta = 2.0;
  const auto steps = std::max<long>(1, static_cast<long>(std::ceil(norm_A * std::abs(t) / theta)));
  const double h = t / static_cast<double>(steps);
  CVec term(v.size());
  for (long s = 0; s < steps; ++s) {
    CVec f = v;
    term = v;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
      term = (A * term) * (h / k);
      f += term;
      const double tn = term.lpNorm<Eigen::Infinity>();
      const double fn = f.lpNorm<Eigen::Infinity>();
      if (tn + prev <= tol * fn) break;
      prev = tn;
    }
    v = std::move(f);
  }
  return v;
}

}  // namespace thirdq
