// Shared fixtures for the unit tests: random models and interior comparisons.

#pragma once

#include "thirdq/fockspace.hpp"
#include "thirdq/model.hpp"
#include "thirdq/spectral.hpp"
#include "thirdq/superop.hpp"

#include <random>

namespace thirdq::testing {

inline cplx random_complex(std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return {g(rng), g(rng)};
}

inline CMat random_matrix(std::mt19937& rng, int rows, int cols, double scale = 1.0) {
  CMat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = random_complex(rng, scale);
  return m;
}

inline CVec random_vector(std::mt19937& rng, int n, double scale = 1.0) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = random_complex(rng, scale);
  return v;
}

// All terms switched on; redrawn until the rapidities are safely stable and S invertible.
inline ModelSpec random_stable_model(std::mt19937& rng, int n = 1) {
  for (;;) {
    auto spec = ModelSpec::empty(n);
    const CMat h = random_matrix(rng, n, n, 0.5);
    spec.H = 0.5 * (h + h.adjoint());
    const CMat k = random_matrix(rng, n, n, 0.15);
    spec.K = 0.5 * (k + k.transpose());
    spec.Omega = random_matrix(rng, n, n, 0.4);
    spec.add_jump(CVec::Ones(n) + random_vector(rng, n, 0.2), random_vector(rng, n, 0.2), random_vector(rng, n, 0.4));
    spec.add_jump(random_vector(rng, n, 0.3), random_vector(rng, n, 0.1), random_vector(rng, n, 0.3));
    try {
      const auto qf = build_quadratic_form(build_structure_matrices(spec), spec);
      const auto sd = compute_spectral(qf);
      if (sd.betas.real().minCoeff() < 0.1) continue;
      for (const auto& s : enumerate_sectors(spec)) (void)sector_shift(qf, s);
      return spec;
    } catch (const NumericalError&) {
    }
  }
}

// Every term switched on, with a steady state that fits comfortably below cutoff 20.
inline ModelSpec mild_coupled_model() {
  auto spec = ModelSpec::empty(1);
  spec.H(0, 0) = 0.5;
  spec.K(0, 0) = cplx(0.05, 0.02);
  spec.Omega(0, 0) = cplx(0.15, -0.1);
  spec.add_jump(CVec::Constant(1, 1.0), CVec::Constant(1, 0.1), CVec::Constant(1, cplx(0.2, 0.1)));
  spec.add_jump(CVec::Zero(1), CVec::Zero(1), CVec::Constant(1, 0.1));
  return spec;
}

// max |A_ij − B_ij| over interior rows and columns.
inline double interior_max_diff(const SpMat& A, const SpMat& B, const std::vector<bool>& mask) {
  const SpMat D = A - B;
  double worst = 0.0;
  for (Eigen::Index c = 0; c < D.outerSize(); ++c) {
    if (!mask[static_cast<std::size_t>(c)]) continue;
    for (SpMat::InnerIterator it(D, c); it; ++it)
      if (mask[static_cast<std::size_t>(it.row())]) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

// Interior rows of A·v for v supported on the interior.
inline double interior_norm(const CVec& v, const std::vector<bool>& mask) { return interior_part(v, mask).norm(); }

// |⟨a|b⟩|² / (‖a‖²‖b‖²)
inline double fidelity(const CVec& a, const CVec& b) {
  return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

// vec(|α⟩⟨β|) with the sector-local column-stacked layout.
inline CVec coherent_outer(cplx alpha, cplx beta, int cutoff) {
  const CVec a = coherent_state(alpha, cutoff), b = coherent_state(beta, cutoff);
  return vec(CMat(a * b.adjoint()));
}

}  // namespace thirdq::testing
