// state.hpp — initial density matrices and observables on the truncated boson ⊗ spin space.

#pragma once

#include "thirdq/fockspace.hpp"
#include "thirdq/model.hpp"
#include "thirdq/types.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace thirdq {

inline constexpr double kStateTolerance = 1e-10;

struct InitialState {
  CMat rho;  // full boson ⊗ spin density matrix

  // Boson factor ⊗ spin factor.
  static InitialState product(const CMat& boson, const CMat& spin) {
    return {Eigen::kroneckerProduct(boson, spin).eval()};
  }
  static InitialState explicit_matrix(CMat rho) { return {std::move(rho)}; }

  // |k⟩⟨k| on every mode.
  static CMat fock(int k, int cutoff, int n = 1) {
    if (k < 0 || k >= cutoff) throw ModelError("Fock occupation outside the truncated space");
    CMat one = CMat::Zero(cutoff, cutoff);
    one(k, k) = 1.0;
    CMat out = one;
    for (int j = 1; j < n; ++j) out = Eigen::kroneckerProduct(out, one).eval();
    return out;
  }

  // |α⟩⟨α| on every mode, renormalized on the truncated space.
  static CMat coherent(cplx alpha, int cutoff, int n = 1) {
    CVec v = coherent_state(alpha, cutoff);
    v /= v.norm();
    CMat one = v * v.adjoint();
    CMat out = one;
    for (int j = 1; j < n; ++j) out = Eigen::kroneckerProduct(out, one).eval();
    return out;
  }
};

inline std::vector<std::string> validate_state(const InitialState& s) {
  std::vector<std::string> out;
  const CMat& r = s.rho;
  if (r.rows() != r.cols()) {
    out.push_back("density matrix is not square");
    return out;
  }
  const double herm = max_abs(r - r.adjoint());
  if (herm > kStateTolerance) out.push_back("density matrix not Hermitian, deviation " + std::to_string(herm));
  const cplx tr = r.trace();
  if (std::abs(tr - 1.0) > kStateTolerance) out.push_back("density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (r + r.adjoint()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().size() && es.eigenvalues().minCoeff() < -kStateTolerance)
    out.push_back("density matrix is not positive semidefinite");
  return out;
}

inline void require_valid(const InitialState& s, const FockRep& rep) {
  if (s.rho.rows() != static_cast<Eigen::Index>(rep.dim()))
    throw ModelError("initial state dimension does not match the truncated space");
  auto v = validate_state(s);
  if (v.empty()) return;
  std::string msg = "invalid initial state:";
  for (const auto& x : v) msg += " " + x + ";";
  throw ModelError(msg);
}

// ---------------------------------------------------------------- observables

namespace detail {
inline CMat lift_spin_site(const FockRep& rep, const ModelSpec& spec, int site, const CMat& op2) {
  if (site < 0 || site >= spec.n) throw ModelError("spin site index out of range");
  CMat out = CMat::Identity(1, 1);
  for (int j = 0; j < spec.n; ++j) {
    const auto d = static_cast<Eigen::Index>(spec.spin_spectra[static_cast<std::size_t>(j)].size());
    if (j == site) {
      if (op2.rows() != d) throw ModelError("Pauli observables need two-level spin sites");
      out = Eigen::kroneckerProduct(out, op2).eval();
    } else {
      out = Eigen::kroneckerProduct(out, CMat::Identity(d, d)).eval();
    }
  }
  return Eigen::kroneckerProduct(CMat::Identity(static_cast<Eigen::Index>(rep.dim_b), static_cast<Eigen::Index>(rep.dim_b)), out).eval();
}
}  // namespace detail

inline CMat sigma_x(const FockRep& rep, const ModelSpec& spec, int site = 0) {
  CMat p(2, 2);
  p << 0, 1, 1, 0;
  return detail::lift_spin_site(rep, spec, site, p);
}
inline CMat sigma_y(const FockRep& rep, const ModelSpec& spec, int site = 0) {
  CMat p(2, 2);
  p << 0, -kI, kI, 0;
  return detail::lift_spin_site(rep, spec, site, p);
}
// The spin operator itself: diag(spectrum) on the site.
inline CMat sigma_z(const FockRep& rep, const ModelSpec& spec, int site = 0) {
  (void)spec;
  return CMat(rep.full_sigma(site));
}
inline CMat number_operator(const FockRep& rep, int mode = 0) {
  const SpMat a = rep.full_a(mode);
  return CMat(SpMat(a.adjoint() * a));
}
inline CMat identity_observable(const FockRep& rep) {
  return CMat::Identity(static_cast<Eigen::Index>(rep.dim()), static_cast<Eigen::Index>(rep.dim()));
}

// Spin state ½(I + σˣ) on every two-level site.
inline CMat spin_x_plus(const ModelSpec& spec) {
  CMat p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  CMat out = CMat::Identity(1, 1);
  for (int j = 0; j < spec.n; ++j) out = Eigen::kroneckerProduct(out, p).eval();
  return out;
}

// Tr(A ρ) for a vectorized state.
inline cplx expectation(const CVec& state, const CMat& observable) {
  const Eigen::Index D = observable.rows();
  if (state.size() != D * D) throw std::invalid_argument("expectation: dimension mismatch");
  const CMat AT = observable.transpose();
  return (Eigen::Map<const CVec>(AT.data(), AT.size()).transpose() * state)(0, 0);
}

}  // namespace thirdq
