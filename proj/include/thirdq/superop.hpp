// superop.hpp — quadratic form of the Liouvillian in the operators b̂ = (â₀, â₁, â₀′, â₁′).
//
//   L̂ = (b̂ − d)·S (b̂ − d) − Ŝ₀,   S = [[0, −X], [−Xᵀ, Y]],   2 S d = −G σ̃.
//
// Within a sector σ̃ = (s^L, s^R) is a real vector, so d and Ŝ₀ are plain numbers per sector.

#pragma once

#include "thirdq/model.hpp"
#include "thirdq/types.hpp"

#include <sstream>

namespace thirdq {

struct QuadraticForm {
  int n = 0;
  CMat X;  // 2n × 2n
  CMat Y;  // 2n × 2n, symmetric
  CMat S;  // 4n × 4n
  CMat G;  // 4n × 2n
  StructureMatrices sm;
};

struct SectorShift {
  Sector sector;
  CVec d;  // (s₀, s₁, s₀′, s₁′)
  cplx S0;
  // Constant of the normal-ordered form: L̂ = −2 Σ β_r ζ′_r ζ_r − normal_constant.
  // Ŝ₀ carries tr X from the symmetric ordering of b̂·S b̂, so this is Ŝ₀ − tr X.
  cplx normal_constant;
};

inline constexpr double kSingularThreshold = 1e-10;

inline QuadraticForm build_quadratic_form(const StructureMatrices& sm, const ModelSpec& spec) {
  const Eigen::Index n = spec.n;
  const CMat& H = spec.H;
  const CMat& K = spec.K;
  const CMat& Om = spec.Omega;
  const CMat& M = sm.M;
  const CMat& N = sm.N;
  const CMat& L = sm.L;
  const CMat& E = sm.E;
  const CMat& F = sm.F;

  QuadraticForm qf;
  qf.n = spec.n;
  qf.sm = sm;

  qf.X.resize(2 * n, 2 * n);
  qf.X.topLeftCorner(n, n) = kI * H.conjugate() - N.conjugate() + M;
  qf.X.topRightCorner(n, n) = -2.0 * kI * K - L + L.transpose();
  qf.X.bottomLeftCorner(n, n) = 2.0 * kI * K.conjugate() - L.conjugate() + L.adjoint();
  // (a†a)^R acts in reversed order, which transposes H in this block.
  qf.X.bottomRightCorner(n, n) = -kI * H - N + M.conjugate();
  qf.X *= 0.5;

  qf.Y.resize(2 * n, 2 * n);
  qf.Y.topLeftCorner(n, n) = -2.0 * kI * K.conjugate() - L.conjugate() - L.adjoint();
  qf.Y.topRightCorner(n, n) = 2.0 * N;
  qf.Y.bottomLeftCorner(n, n) = 2.0 * N.transpose();
  qf.Y.bottomRightCorner(n, n) = 2.0 * kI * K - L - L.transpose();
  qf.Y *= 0.5;

  qf.S = CMat::Zero(4 * n, 4 * n);
  qf.S.topRightCorner(2 * n, 2 * n) = -qf.X;
  qf.S.bottomLeftCorner(2 * n, 2 * n) = -qf.X.transpose();
  qf.S.bottomRightCorner(2 * n, 2 * n) = qf.Y;

  // Row blocks multiply â₀, â₁, â₀′, â₁′; column blocks multiply σ^L, σ^R.
  const CMat OmT = Om.transpose();
  const CMat OmH = Om.adjoint();
  qf.G.resize(4 * n, 2 * n);
  qf.G.block(0, 0, n, n) = F.conjugate() - E - kI * OmT;
  qf.G.block(0, n, n, n) = -F.conjugate() + E + kI * OmT;
  qf.G.block(n, 0, n, n) = -F + E.conjugate() - kI * OmH;
  qf.G.block(n, n, n, n) = F - E.conjugate() + kI * OmH;
  qf.G.block(2 * n, 0, n, n) = -F - E.conjugate() - kI * OmH;
  qf.G.block(2 * n, n, n, n) = 2.0 * F;
  qf.G.block(3 * n, 0, n, n) = 2.0 * F.conjugate();
  qf.G.block(3 * n, n, n, n) = -F.conjugate() - E + kI * OmT;
  return qf;
}

// σ̃ restricted to the sector: (s^L, s^R).
inline CVec sigma_tilde(const Sector& s) {
  CVec v(s.sL.size() + s.sR.size());
  v << s.sL.cast<cplx>(), s.sR.cast<cplx>();
  return v;
}

inline SectorShift sector_shift(const QuadraticForm& qf, const Sector& sector) {
  Eigen::JacobiSVD<CMat> svd(qf.S);
  const RVec& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
  if (!(smax > 0.0) || smin < kSingularThreshold * smax) {
    std::ostringstream os;
    os << "S is numerically singular (smallest singular value " << smin << ")";
    throw SingularS(os.str(), smin);
  }

  Eigen::PartialPivLU<CMat> lu(qf.S);
  const CVec sig = sigma_tilde(sector);
  const CVec g_sig = qf.G * sig;
  const CVec sinv_g = lu.solve(g_sig);

  SectorShift out;
  out.sector = sector;
  out.d = -0.5 * sinv_g;

  const CVec sL = sector.sL.cast<cplx>();
  const CVec sR = sector.sR.cast<cplx>();
  const CMat& W = qf.sm.W;
  const cplx trace_term = qf.sm.M.trace() - qf.sm.N.trace();
  const cplx quad = 0.25 * g_sig.transpose() * sinv_g;  // ¼ σ̃·Gᵀ S⁻¹ G σ̃
  const cplx dephasing = (sL - sR).transpose() * (W * sR - W.conjugate() * sL);
  out.S0 = trace_term + quad - dephasing;
  out.normal_constant = out.S0 - qf.X.trace();
  return out;
}

// ‖2 S d + G σ̃‖ relative to ‖G σ̃‖ (absolute when G σ̃ = 0).
inline double shift_residual(const QuadraticForm& qf, const SectorShift& sh) {
  const CVec g_sig = qf.G * sigma_tilde(sh.sector);
  const double r = (2.0 * qf.S * sh.d + g_sig).norm();
  const double scale = g_sig.norm();
  return scale > 0 ? r / scale : r;
}

}  // namespace thirdq
