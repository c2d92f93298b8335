// spectral.hpp — rapidities, normal-mode transformation and the Lyapunov solution.
//
// X = P diag(β) P⁻¹,  Xᵀ Z + Z X = Y,  λ_m = −2 Σ_r m_r β_r.

#pragma once

#include "thirdq/superop.hpp"
#include "thirdq/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace thirdq {

inline constexpr double kDefectiveThreshold = 1e10;
inline constexpr double kStabilityTolerance = 1e-10;
inline constexpr double kResonanceTolerance = 1e-10;

struct Diagonalization {
  CVec betas;
  CMat P;
  CMat Pinv;
  double condition = 1.0;  // κ₂(P)
};

struct SpectralData {
  CVec betas;
  CMat P;
  CMat Pinv;
  CMat Z;
  bool stable = false;
  // Some Re β_r is zero within tolerance: oscillating modes that never decay.
  bool marginal = false;
};

namespace detail {

inline Eigen::Index first_nonzero(const CVec& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > 1e-12 * scale) return i;
  return v.size();
}

// Unit 2-norm, first nonzero component real-positive.
inline void fix_phase(Eigen::Ref<CVec> v) {
  v /= v.norm();
  const Eigen::Index i = first_nonzero(v);
  if (i < v.size()) v *= std::conj(v[i]) / std::abs(v[i]);
}

inline bool vector_before(const CVec& a, const CVec& b) {
  const auto ia = first_nonzero(a), ib = first_nonzero(b);
  if (ia != ib) return ia < ib;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].real() - b[i].real()) > 1e-12) return a[i].real() > b[i].real();
    if (std::abs(a[i].imag() - b[i].imag()) > 1e-12) return a[i].imag() > b[i].imag();
  }
  return false;
}

inline double condition_number(const CMat& m) {
  Eigen::JacobiSVD<CMat> svd(m);
  const RVec& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s[s.size() - 1];
  return smin > 0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Ordered by descending Re β, then descending Im β, then eigenvector order.
inline Diagonalization diagonalize_X(const CMat& X) {
  const Eigen::Index dim = X.rows();
  Eigen::ComplexEigenSolver<CMat> es(X, true);
  if (es.info() != Eigen::Success) throw DefectiveX("eigen-decomposition of X failed", 0.0);

  CMat vecs = es.eigenvectors();
  for (Eigen::Index c = 0; c < dim; ++c) detail::fix_phase(vecs.col(c));
  const CVec vals = es.eigenvalues();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const cplx x = vals[a], y = vals[b];
    if (std::abs(x.real() - y.real()) > kStabilityTolerance) return x.real() > y.real();
    if (std::abs(x.imag() - y.imag()) > kStabilityTolerance) return x.imag() > y.imag();
    return detail::vector_before(vecs.col(a), vecs.col(b));
  });

  Diagonalization out;
  out.betas.resize(dim);
  out.P.resize(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    out.betas[c] = vals[order[static_cast<std::size_t>(c)]];
    out.P.col(c) = vecs.col(order[static_cast<std::size_t>(c)]);
  }
  out.condition = detail::condition_number(out.P);
  if (!(out.condition <= kDefectiveThreshold)) {
    std::ostringstream os;
    os << "X is not diagonalizable to working precision (cond(P) = " << out.condition << ")";
    throw DefectiveX(os.str(), out.condition);
  }
  out.Pinv = out.P.partialPivLu().inverse();
  return out;
}

// Bartels–Stewart on the complex Schur form X = U T U*:
// with Z = Ū W U*, the equation becomes Tᵀ W + W T = Uᵀ Y U, solved entry by entry.
inline CMat solve_lyapunov(const CMat& X, const CMat& Y, double* asymmetry = nullptr) {
  const Eigen::Index dim = X.rows();
  if (X.cols() != dim || Y.rows() != dim || Y.cols() != dim)
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  // Z = 0 solves the homogeneous equation even at resonance.
  if (max_abs(Y) == 0.0) {
    if (asymmetry) *asymmetry = 0.0;
    return CMat::Zero(dim, dim);
  }
  Eigen::ComplexSchur<CMat> schur(X);
  const CMat& T = schur.matrixT();
  const CMat& U = schur.matrixU();

  const double scale = std::max(1.0, max_abs(X));
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j) {
      const double gap = std::abs(T(i, i) + T(j, j));
      if (gap <= kResonanceTolerance * scale) {
        std::ostringstream os;
        os << "resonant rapidity pair: |beta_r + beta_s| = " << gap;
        throw LyapunovUnsolvable(os.str(), gap);
      }
    }

  const CMat C = U.transpose() * Y * U;
  CMat W = CMat::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      cplx acc = C(i, j);
      for (Eigen::Index k = 0; k < i; ++k) acc -= T(k, i) * W(k, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= W(i, k) * T(k, j);
      W(i, j) = acc / (T(i, i) + T(j, j));
    }
  CMat Z = U.conjugate() * W * U.adjoint();

  double dev = 0.0;
  if (max_abs(Y - Y.transpose()) <= 1e-12 * std::max(1.0, max_abs(Y))) {
    dev = max_abs(Z - Z.transpose());
    Z = (0.5 * (Z + Z.transpose())).eval();
  }
  if (asymmetry) *asymmetry = dev;
  return Z;
}

inline cplx mode_eigenvalue(const CVec& betas, const std::vector<int>& m) {
  if (m.size() != static_cast<std::size_t>(betas.size()))
    throw std::invalid_argument("mode_eigenvalue: multi-index length must equal the number of rapidities");
  cplx acc = 0.0;
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r] < 0) throw std::invalid_argument("mode_eigenvalue: multi-index entries must be non-negative");
    acc += static_cast<double>(m[r]) * betas[static_cast<Eigen::Index>(r)];
  }
  return -2.0 * acc;
}

inline bool assert_stability(const CVec& betas) {
  for (Eigen::Index r = 0; r < betas.size(); ++r)
    if (betas[r].real() < -kStabilityTolerance) return false;
  return true;
}

inline bool is_marginal(const CVec& betas) {
  for (Eigen::Index r = 0; r < betas.size(); ++r)
    if (std::abs(betas[r].real()) <= kStabilityTolerance) return true;
  return false;
}

inline SpectralData compute_spectral(const QuadraticForm& qf) {
  auto diag = diagonalize_X(qf.X);
  SpectralData sd;
  sd.betas = diag.betas;
  sd.P = std::move(diag.P);
  sd.Pinv = std::move(diag.Pinv);
  sd.stable = assert_stability(sd.betas);
  sd.marginal = is_marginal(sd.betas);
  sd.Z = solve_lyapunov(qf.X, qf.Y);
  return sd;
}

}  // namespace thirdq
