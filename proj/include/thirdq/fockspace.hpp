// fockspace.hpp — truncated Fock-space matrices for operators and superoperators.
//
// Conventions used everywhere in this library:
//   * Hilbert space = (boson modes, mode 0 slowest) ⊗ (spin sites, site 0 slowest).
//   * Column-stacking vectorization: vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ), so the left map of A is
//     I ⊗ A and the right map of B is Bᵀ ⊗ I.
//   * A sector (s^L, s^R) is the span of |i⟩⟨j| ⊗ |s^L⟩⟨s^R| over boson basis states i, j.
//     Sector-local vectors are vec of the boson block, index i + dim_b · j.
//   * The interior subspace contains basis states whose boson occupations (ket and bra) are
//     all ≤ cutoff − 3; canonical relations hold exactly there.

#pragma once

#include "thirdq/model.hpp"
#include "thirdq/spectral.hpp"
#include "thirdq/superop.hpp"
#include "thirdq/types.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <sstream>
#include <vector>

namespace thirdq {

inline constexpr int kDefaultCutoff = 30;
inline constexpr int kInteriorMargin = 3;
inline constexpr double kNullTolerance = 1e-8;
inline constexpr double kSupportTolerance = 1e-10;

namespace detail {

inline SpMat sparse_identity(Eigen::Index d) {
  SpMat I(d, d);
  I.setIdentity();
  return I;
}

inline SpMat kron(const SpMat& a, const SpMat& b) {
  SpMat out = Eigen::kroneckerProduct(a, b).eval();
  out.makeCompressed();
  return out;
}

inline SpMat lowering(int cutoff) {
  std::vector<Triplet> t;
  for (int k = 1; k < cutoff; ++k) t.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
  SpMat a(cutoff, cutoff);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

inline std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace detail

struct FockRep {
  int n = 0;
  int cutoff = 0;
  std::size_t dim_b = 0;
  std::size_t dim_s = 0;
  std::vector<SpMat> a_ops;      // boson space
  std::vector<SpMat> sigma_ops;  // spin space, diagonal

  std::size_t dim() const { return dim_b * dim_s; }

  // Operators lifted to the full boson ⊗ spin space.
  SpMat full_a(int j) const {
    return detail::kron(a_ops[static_cast<std::size_t>(j)], detail::sparse_identity(static_cast<Eigen::Index>(dim_s)));
  }
  SpMat full_sigma(int j) const {
    return detail::kron(detail::sparse_identity(static_cast<Eigen::Index>(dim_b)), sigma_ops[static_cast<std::size_t>(j)]);
  }
  SpMat identity() const { return detail::sparse_identity(static_cast<Eigen::Index>(dim())); }

  // Occupation of mode j in boson basis state `b`.
  int occupation(std::size_t b, int j) const {
    for (int k = n - 1; k > j; --k) b /= static_cast<std::size_t>(cutoff);
    return static_cast<int>(b % static_cast<std::size_t>(cutoff));
  }
  int max_occupation(std::size_t b) const {
    int m = 0;
    for (int j = 0; j < n; ++j) m = std::max(m, occupation(b, j));
    return m;
  }
  bool interior_state(std::size_t b) const { return max_occupation(b) <= cutoff - kInteriorMargin; }
};

inline FockRep build_fock_rep(const ModelSpec& spec, int cutoff = kDefaultCutoff) {
  if (cutoff < 2) throw ModelError("cutoff must be at least 2");
  FockRep rep;
  rep.n = spec.n;
  rep.cutoff = cutoff;
  rep.dim_b = detail::ipow(static_cast<std::size_t>(cutoff), spec.n);
  rep.dim_s = spin_dimension(spec);

  const SpMat a1 = detail::lowering(cutoff);
  for (int j = 0; j < spec.n; ++j) {
    SpMat op(1, 1);
    op.insert(0, 0) = 1.0;
    for (int k = 0; k < spec.n; ++k)
      op = detail::kron(op, k == j ? a1 : detail::sparse_identity(cutoff));
    rep.a_ops.push_back(op);
  }
  for (int j = 0; j < spec.n; ++j) {
    std::vector<Triplet> t;
    for (std::size_t s = 0; s < rep.dim_s; ++s) {
      const double v = spin_values(spec, s)[j];
      if (v != 0.0) t.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), v);
    }
    SpMat sig(static_cast<Eigen::Index>(rep.dim_s), static_cast<Eigen::Index>(rep.dim_s));
    sig.setFromTriplets(t.begin(), t.end());
    rep.sigma_ops.push_back(sig);
  }
  return rep;
}

struct SuperRep {
  FockRep rep;
  std::size_t vec_dim = 0;
  std::vector<SpMat> ahat;        // â₀,ⱼ then â₁,ⱼ
  std::vector<SpMat> ahat_prime;  // â₀′,ⱼ then â₁′,ⱼ
  std::vector<SpMat> sigmaL;
  std::vector<SpMat> sigmaR;
};

// Left/right multiplication maps on the vectorized full space.
inline SpMat left_map(const SpMat& A) { return detail::kron(detail::sparse_identity(A.rows()), A); }
inline SpMat right_map(const SpMat& B) {
  return detail::kron(SpMat(B.transpose()), detail::sparse_identity(B.rows()));
}

inline SuperRep build_super_basis(const FockRep& rep) {
  if (rep.cutoff < 2) throw ModelError("cutoff must be at least 2");
  SuperRep sup;
  sup.rep = rep;
  sup.vec_dim = rep.dim() * rep.dim();
  std::vector<SpMat> aL, aR, adL, adR;
  for (int j = 0; j < rep.n; ++j) {
    const SpMat a = rep.full_a(j);
    const SpMat ad = SpMat(a.adjoint());
    aL.push_back(left_map(a));
    aR.push_back(right_map(a));
    adL.push_back(left_map(ad));
    adR.push_back(right_map(ad));
    const SpMat s = rep.full_sigma(j);
    sup.sigmaL.push_back(left_map(s));
    sup.sigmaR.push_back(right_map(s));
  }
  for (int j = 0; j < rep.n; ++j) sup.ahat.push_back(aL[j]);
  for (int j = 0; j < rep.n; ++j) sup.ahat.push_back(adR[j]);
  for (int j = 0; j < rep.n; ++j) sup.ahat_prime.push_back(SpMat(adL[j] - adR[j]));
  for (int j = 0; j < rep.n; ++j) sup.ahat_prime.push_back(SpMat(aR[j] - aL[j]));
  return sup;
}

// ---------------------------------------------------------------- sector plumbing

// Full vec index of each sector-local index.
inline std::vector<Eigen::Index> sector_indices(const FockRep& rep, const Sector& s) {
  const std::size_t D = rep.dim();
  std::vector<Eigen::Index> idx;
  idx.reserve(rep.dim_b * rep.dim_b);
  for (std::size_t j = 0; j < rep.dim_b; ++j)
    for (std::size_t i = 0; i < rep.dim_b; ++i) {
      const std::size_t row = i * rep.dim_s + s.left_index;
      const std::size_t col = j * rep.dim_s + s.right_index;
      idx.push_back(static_cast<Eigen::Index>(row + D * col));
    }
  return idx;
}

// Block of a sector-preserving superoperator.
inline SpMat restrict_to_sector(const SpMat& op, const std::vector<Eigen::Index>& idx) {
  std::vector<Eigen::Index> local(static_cast<std::size_t>(op.rows()), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) local[static_cast<std::size_t>(idx[k])] = static_cast<Eigen::Index>(k);
  std::vector<Triplet> t;
  for (Eigen::Index c = 0; c < op.outerSize(); ++c)
    for (SpMat::InnerIterator it(op, c); it; ++it) {
      const auto r = local[static_cast<std::size_t>(it.row())];
      const auto cc = local[static_cast<std::size_t>(it.col())];
      if (r >= 0 && cc >= 0) t.emplace_back(r, cc, it.value());
    }
  const auto d = static_cast<Eigen::Index>(idx.size());
  SpMat out(d, d);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

inline CVec embed_sector_vector(const FockRep& rep, const Sector& s, const CVec& local) {
  CVec full = CVec::Zero(static_cast<Eigen::Index>(rep.dim() * rep.dim()));
  const auto idx = sector_indices(rep, s);
  for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = local[static_cast<Eigen::Index>(k)];
  return full;
}

// Sector-local vector as the dim_b × dim_b boson matrix.
inline CMat sector_vector_to_matrix(const FockRep& rep, const CVec& local) {
  const auto db = static_cast<Eigen::Index>(rep.dim_b);
  return Eigen::Map<const CMat>(local.data(), db, db);
}

inline CMat unvec(const CVec& v, Eigen::Index dim) { return Eigen::Map<const CMat>(v.data(), dim, dim); }
inline CVec vec(const CMat& m) { return Eigen::Map<const CVec>(m.data(), m.size()); }

// Interior flags for sector-local indices.
inline std::vector<bool> sector_interior(const FockRep& rep) {
  std::vector<bool> in(rep.dim_b * rep.dim_b);
  for (std::size_t j = 0; j < rep.dim_b; ++j)
    for (std::size_t i = 0; i < rep.dim_b; ++i)
      in[i + rep.dim_b * j] = rep.interior_state(i) && rep.interior_state(j);
  return in;
}

// Interior flags for full vec indices.
inline std::vector<bool> full_interior(const FockRep& rep) {
  const std::size_t D = rep.dim();
  std::vector<bool> in(D * D);
  for (std::size_t c = 0; c < D; ++c)
    for (std::size_t r = 0; r < D; ++r)
      in[r + D * c] = rep.interior_state(r / rep.dim_s) && rep.interior_state(c / rep.dim_s);
  return in;
}

inline CMat interior_block(const CMat& m, const std::vector<bool>& mask) {
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) keep.push_back(static_cast<Eigen::Index>(i));
  return m(keep, keep);
}

inline CVec interior_part(const CVec& v, const std::vector<bool>& mask) {
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) keep.push_back(static_cast<Eigen::Index>(i));
  return v(keep);
}

// Truncated coherent-state amplitudes ⟨k|α⟩ = e^{−|α|²/2} αᵏ/√k!.
inline CVec coherent_state(cplx alpha, int cutoff) {
  CVec v(cutoff);
  cplx term = std::exp(-0.5 * std::norm(alpha));
  for (int k = 0; k < cutoff; ++k) {
    v[k] = term;
    term *= alpha / std::sqrt(static_cast<double>(k + 1));
  }
  return v;
}

// ---------------------------------------------------------------- normal modes

struct SectorBasis {
  Sector sector;
  int cutoff = 0;
  std::vector<SpMat> zeta;        // sector-local
  std::vector<SpMat> zeta_prime;  // sector-local
  std::vector<bool> interior;     // sector-local mask
  CVec ness_vec;                  // unit norm once find_ness has run
  int kernel_dim = 0;
  double kernel_sv = 0.0;  // smallest relative singular value of the stacked ζ system
  double gap_sv = 0.0;     // first relative singular value above the kernel
};

// ζ = Pᵀ((â − s) − Z(â′ − s′)), ζ′ = P⁻¹(â′ − s′) on the sector block.
inline SectorBasis build_zeta(const SuperRep& sup, const SpectralData& sd, const SectorShift& shift) {
  const int n2 = 2 * sup.rep.n;
  const auto idx = sector_indices(sup.rep, shift.sector);
  const auto dim = static_cast<Eigen::Index>(idx.size());
  SpMat I(dim, dim);
  I.setIdentity();

  std::vector<SpMat> a, ap;
  for (int i = 0; i < n2; ++i) {
    a.push_back(SpMat(restrict_to_sector(sup.ahat[static_cast<std::size_t>(i)], idx) - shift.d[i] * I));
    ap.push_back(SpMat(restrict_to_sector(sup.ahat_prime[static_cast<std::size_t>(i)], idx) - shift.d[n2 + i] * I));
  }

  SectorBasis basis;
  basis.sector = shift.sector;
  basis.cutoff = sup.rep.cutoff;
  basis.interior = sector_interior(sup.rep);
  for (int r = 0; r < n2; ++r) {
    SpMat zr(dim, dim), zpr(dim, dim);
    for (int i = 0; i < n2; ++i) {
      SpMat shifted = a[static_cast<std::size_t>(i)];
      for (int j = 0; j < n2; ++j)
        if (sd.Z(i, j) != cplx(0.0)) shifted -= sd.Z(i, j) * ap[static_cast<std::size_t>(j)];
      if (sd.P(i, r) != cplx(0.0)) zr += sd.P(i, r) * shifted;
      if (sd.Pinv(r, i) != cplx(0.0)) zpr += sd.Pinv(r, i) * ap[static_cast<std::size_t>(i)];
    }
    zr.prune(cplx(0.0));
    zpr.prune(cplx(0.0));
    basis.zeta.push_back(zr);
    basis.zeta_prime.push_back(zpr);
  }
  return basis;
}

// Common kernel of the ζ_r over vectors supported on the interior. Unit norm, largest
// component real-positive.
// Stores the vector and the kernel diagnostics in `basis`.
inline const CVec& find_ness(SectorBasis& basis) {
  std::vector<Eigen::Index> cols;
  for (std::size_t i = 0; i < basis.interior.size(); ++i)
    if (basis.interior[i]) cols.push_back(static_cast<Eigen::Index>(i));
  const auto dim = static_cast<Eigen::Index>(basis.interior.size());
  std::vector<Eigen::Index> col_of(static_cast<std::size_t>(dim), -1);
  for (std::size_t k = 0; k < cols.size(); ++k) col_of[static_cast<std::size_t>(cols[k])] = static_cast<Eigen::Index>(k);

  // Stack the interior columns of every ζ_r, keeping only rows that are touched.
  std::vector<Triplet> t;
  Eigen::Index row = 0;
  for (const auto& z : basis.zeta) {
    std::vector<Eigen::Index> row_of(static_cast<std::size_t>(dim), -1);
    for (Eigen::Index c = 0; c < z.outerSize(); ++c) {
      const auto lc = col_of[static_cast<std::size_t>(c)];
      if (lc < 0) continue;
      for (SpMat::InnerIterator it(z, c); it; ++it) {
        auto& r = row_of[static_cast<std::size_t>(it.row())];
        if (r < 0) r = row++;
        t.emplace_back(r, lc, it.value());
      }
    }
  }
  CMat A = CMat::Zero(row, static_cast<Eigen::Index>(cols.size()));
  for (const auto& e : t) A(e.row(), e.col()) += e.value();

  // A is tall; the SVD of its triangular factor has the same singular values and V.
  if (A.rows() > A.cols()) {
    Eigen::HouseholderQR<CMat> qr(A);
    A = qr.matrixQR().topRows(A.cols()).triangularView<Eigen::Upper>();
  }
  Eigen::BDCSVD<CMat> svd(A, Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  const Eigen::Index ncols = static_cast<Eigen::Index>(cols.size());
  // A has at least as many rows as interior columns whenever ζ is non-degenerate.
  const Eigen::Index nsv = s.size();
  int kdim = 0;
  for (Eigen::Index i = 0; i < nsv; ++i)
    if (s[i] <= kNullTolerance * smax) ++kdim;
  kdim += static_cast<int>(ncols - nsv);  // rank-deficient by shape

  basis.kernel_dim = kdim;
  basis.kernel_sv = nsv ? s[nsv - 1] / smax : 0.0;
  basis.gap_sv = (nsv > kdim) ? s[nsv - 1 - kdim] / smax : 0.0;
  if (kdim == 0) {
    std::ostringstream os;
    os << "no operator is annihilated by all zeta in sector " << basis.sector.label()
       << " (smallest relative singular value " << basis.kernel_sv
       << "; a larger cutoff helps if the steady state reaches the edge)";
    throw NoKernel(os.str(), basis.kernel_sv);
  }

  const CVec v_int = svd.matrixV().col(svd.matrixV().cols() - 1);
  CVec v = CVec::Zero(dim);
  for (std::size_t k = 0; k < cols.size(); ++k) v[cols[k]] = v_int[static_cast<Eigen::Index>(k)];
  // Near-ties (|z| = 1 makes several coherent amplitudes equal) go to the lowest index.
  const double vmax = v.cwiseAbs().maxCoeff();
  Eigen::Index imax = 0;
  while (std::abs(v[imax]) < (1.0 - 1e-9) * vmax) ++imax;
  v *= std::conj(v[imax]) / std::abs(v[imax]);
  v /= v.norm();
  basis.ness_vec = v;
  return basis.ness_vec;
}

inline bool ambiguous_kernel(const SectorBasis& b) { return b.kernel_dim > 1; }

// Largest boson occupation (ket or bra) carrying a component above kSupportTolerance·max.
inline int effective_support(const FockRep& rep, const CVec& local) {
  const double scale = local.cwiseAbs().maxCoeff();
  int support = 0;
  for (std::size_t j = 0; j < rep.dim_b; ++j)
    for (std::size_t i = 0; i < rep.dim_b; ++i)
      if (std::abs(local[static_cast<Eigen::Index>(i + rep.dim_b * j)]) > kSupportTolerance * scale)
        support = std::max({support, rep.max_occupation(i), rep.max_occupation(j)});
  return support;
}

// Π_r (ζ′_r)^{m_r}/√(m_r!) applied to `v`, no truncation check. Since ζ′ only raises
// occupations, the result is the exact projection of the untruncated mode onto the
// truncated space whenever `v` is.
inline CVec apply_creation(const SectorBasis& basis, const std::vector<int>& m, CVec v) {
  for (std::size_t r = m.size(); r-- > 0;) {
    for (int k = 1; k <= m[r]; ++k) {
      v = basis.zeta_prime[r] * v;
      v /= std::sqrt(static_cast<double>(k));
    }
  }
  return v;
}

inline CVec build_decay_mode(const SectorBasis& basis, const FockRep& rep, const std::vector<int>& m) {
  if (m.size() != basis.zeta_prime.size())
    throw std::invalid_argument("build_decay_mode: multi-index length must be 2n");
  if (basis.ness_vec.size() == 0) throw std::logic_error("build_decay_mode: NESS not computed");
  int total = 0;
  for (int x : m) total += x;
  const int support = effective_support(rep, basis.ness_vec);
  if (total + support >= rep.cutoff - 2) {
    std::ostringstream os;
    os << "decay mode of order " << total << " on a NESS supported up to occupation " << support
       << " leaves the interior of cutoff " << rep.cutoff;
    throw TruncationOverflow(os.str(), static_cast<double>(total + support));
  }
  return apply_creation(basis, m, basis.ness_vec);
}

// ---------------------------------------------------------------- Liouvillians

struct ModelOperators {
  SpMat H;
  std::vector<SpMat> jumps;
};

inline ModelOperators build_model_operators(const ModelSpec& spec, const FockRep& rep) {
  const int n = spec.n;
  const auto D = static_cast<Eigen::Index>(rep.dim());
  std::vector<SpMat> a, ad, sg;
  for (int j = 0; j < n; ++j) {
    a.push_back(rep.full_a(j));
    ad.push_back(SpMat(a.back().adjoint()));
    sg.push_back(rep.full_sigma(j));
  }
  ModelOperators ops;
  ops.H = SpMat(D, D);
  const CMat OmH = spec.Omega.adjoint();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (spec.H(i, j) != cplx(0.0)) ops.H += spec.H(i, j) * SpMat(ad[i] * a[j]);
      if (spec.K(i, j) != cplx(0.0)) {
        ops.H += spec.K(i, j) * SpMat(a[i] * a[j]);
        ops.H += std::conj(spec.K(i, j)) * SpMat(ad[i] * ad[j]);
      }
      if (spec.Omega(i, j) != cplx(0.0)) ops.H += spec.Omega(i, j) * SpMat(sg[i] * a[j]);
      if (OmH(i, j) != cplx(0.0)) ops.H += OmH(i, j) * SpMat(ad[i] * sg[j]);
    }
  for (const auto& jump : spec.jumps) {
    SpMat L(D, D);
    for (int j = 0; j < n; ++j) {
      L += jump.l[j] * a[j];
      L += jump.k[j] * ad[j];
      L += jump.w[j] * sg[j];
    }
    L.prune(cplx(0.0));
    ops.jumps.push_back(L);
  }
  return ops;
}

// Liouvillian on the full vectorized space, assembled directly from H and the L_μ:
// −i H^L + i H^R + Σ_μ (2 L^L L†^R − (L†L)^L − (L†L)^R).
inline SpMat build_dense_liouvillian(const ModelSpec& spec, const FockRep& rep) {
  if (rep.cutoff < 2) throw ModelError("cutoff must be at least 2");
  const auto ops = build_model_operators(spec, rep);
  SpMat Lv = -kI * left_map(ops.H) + kI * right_map(ops.H);
  for (const auto& L : ops.jumps) {
    const SpMat Ld = L.adjoint();
    const SpMat LdL = Ld * L;
    Lv += 2.0 * SpMat(left_map(L) * right_map(Ld));
    Lv -= left_map(LdL);
    Lv -= right_map(LdL);
  }
  Lv.prune(cplx(0.0));
  return Lv;
}

// −2 Σ_r β_r ζ′_r ζ_r − (Ŝ₀ − tr X) on the sector block.
inline SpMat build_normal_form_liouvillian(const SectorBasis& basis, const SpectralData& sd, const SectorShift& shift) {
  const auto dim = static_cast<Eigen::Index>(basis.interior.size());
  SpMat out(dim, dim);
  for (std::size_t r = 0; r < basis.zeta.size(); ++r)
    out -= 2.0 * sd.betas[static_cast<Eigen::Index>(r)] * SpMat(basis.zeta_prime[r] * basis.zeta[r]);
  SpMat I(dim, dim);
  I.setIdentity();
  out -= shift.normal_constant * I;
  out.prune(cplx(0.0));
  return out;
}

}  // namespace thirdq
