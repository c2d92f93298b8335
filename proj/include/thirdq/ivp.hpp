// ivp.hpp — initial value problem through the decay-mode expansion
//
//   |ρ(t)⟩ = Σ_s Σ_m c_m^s e^{μ_m^s t} |Θ_m^s⟩,   μ_m^s = λ_m − (Ŝ₀ − tr X)(s),
//
// plus the closed-form reference curves for the single-mode examples.
//
// The growth exponent is taken with the decaying sign: λ_m = −2Σ m_r β_r ≤ 0 enters as
// e^{λ_m t}. Printing it as e^{−λ_m t} would make every mode grow.

#pragma once

#include "thirdq/fockspace.hpp"
#include "thirdq/model.hpp"
#include "thirdq/parallel.hpp"
#include "thirdq/solver.hpp"
#include "thirdq/state.hpp"

#include <Eigen/QR>

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace thirdq {

inline constexpr int kDefaultTrunc = 18;
inline constexpr double kIllConditioned = 1e12;

struct SectorBlock {
  Sector sector;
  CVec block;  // sector-local vec of the boson factor of ⟨s^L|ρ₀|s^R⟩
};

struct SectorExpansion {
  Sector sector;
  std::vector<std::vector<int>> indices;
  CVec coefficients;
  CMat modes;  // Θ_m as columns, sector-local
  CVec rates;  // μ_m
  double residual = 0.0;
  double condition = 1.0;
  bool ill_conditioned = false;
};

struct ModeExpansion {
  int trunc = 0;
  FockRep rep;
  std::vector<SectorExpansion> sectors;
  std::vector<std::string> warnings;

  double max_residual() const {
    double r = 0.0;
    for (const auto& s : sectors) r = std::max(r, s.residual);
    return r;
  }
  const SectorExpansion* find(const Sector& s) const {
    for (const auto& e : sectors)
      if (e.sector.left_index == s.left_index && e.sector.right_index == s.right_index) return &e;
    return nullptr;
  }
};

struct EvolutionResult {
  std::string method;
  std::vector<double> t;
  std::vector<cplx> value;
};

// {0} ∪ npoints log-spaced points on [1e-2, tmax].
inline std::vector<double> default_time_grid(double tmax = 10.0, int npoints = 200) {
  std::vector<double> t{0.0};
  const double lo = std::log10(1e-2), hi = std::log10(tmax);
  for (int i = 0; i < npoints; ++i)
    t.push_back(npoints == 1 ? tmax : std::pow(10.0, lo + (hi - lo) * i / (npoints - 1)));
  return t;
}

inline std::vector<double> linear_time_grid(double t0, double t1, int npoints) {
  std::vector<double> t;
  for (int i = 0; i < npoints; ++i) t.push_back(npoints == 1 ? t0 : t0 + (t1 - t0) * i / (npoints - 1));
  return t;
}

// Every m with 0 ≤ m_r < trunc, lexicographic with m_0 slowest.
inline std::vector<std::vector<int>> multi_indices(int length, int trunc) {
  std::vector<std::vector<int>> out;
  std::vector<int> m(static_cast<std::size_t>(length), 0);
  if (trunc < 1) return out;
  while (true) {
    out.push_back(m);
    int r = length - 1;
    while (r >= 0 && ++m[static_cast<std::size_t>(r)] == trunc) m[static_cast<std::size_t>(r--)] = 0;
    if (r < 0) break;
  }
  return out;
}

inline std::vector<SectorBlock> project_initial_state(const InitialState& rho0, const ModelSpec& spec,
                                                      const FockRep& rep) {
  require_valid(rho0, rep);
  std::vector<SectorBlock> out;
  const auto db = static_cast<Eigen::Index>(rep.dim_b);
  const auto ds = static_cast<Eigen::Index>(rep.dim_s);
  for (const auto& sec : enumerate_sectors(spec)) {
    CMat b(db, db);
    for (Eigen::Index j = 0; j < db; ++j)
      for (Eigen::Index i = 0; i < db; ++i)
        b(i, j) = rho0.rho(i * ds + static_cast<Eigen::Index>(sec.left_index), j * ds + static_cast<Eigen::Index>(sec.right_index));
    out.push_back({sec, vec(b)});
  }
  return out;
}

// Least-squares fit of one sector block onto its decay modes.
inline SectorExpansion solve_sector_coefficients(const SectorBlock& blk, const SectorBasis& basis, int trunc,
                                                 const SpectralData& sd, const SectorShift& shift) {
  if (trunc < 1) throw std::invalid_argument("trunc must be at least 1");
  if (basis.ness_vec.size() != blk.block.size()) throw std::invalid_argument("basis and block cutoffs differ");
  SectorExpansion ex;
  ex.sector = blk.sector;
  ex.indices = multi_indices(static_cast<int>(basis.zeta_prime.size()), trunc);
  const auto ncols = static_cast<Eigen::Index>(ex.indices.size());
  ex.modes.resize(blk.block.size(), ncols);
  ex.rates.resize(ncols);

  // Θ_m built incrementally: mode m is one ζ′_r application away from a previous one.
  for (Eigen::Index c = 0; c < ncols; ++c) {
    const auto& m = ex.indices[static_cast<std::size_t>(c)];
    ex.rates[c] = mode_eigenvalue(sd.betas, m) - shift.normal_constant;
    std::size_t r = m.size();
    while (r > 0 && m[r - 1] == 0) --r;
    if (r == 0) {
      ex.modes.col(c) = basis.ness_vec;
      continue;
    }
    --r;
    // Predecessor with m_r lowered by one; with r the last nonzero entry it precedes c.
    auto prev = m;
    --prev[r];
    Eigen::Index pc = 0;
    for (std::size_t q = 0; q < prev.size(); ++q) pc = pc * trunc + prev[q];
    ex.modes.col(c) = (basis.zeta_prime[r] * ex.modes.col(pc)) / std::sqrt(static_cast<double>(m[r]));
  }

  const double target = blk.block.norm();
  if (target == 0.0) {
    ex.coefficients = CVec::Zero(ncols);
    return ex;
  }
  RVec scale(ncols);
  CMat A = ex.modes;
  for (Eigen::Index c = 0; c < ncols; ++c) {
    scale[c] = A.col(c).norm();
    if (scale[c] > 0) A.col(c) /= scale[c];
  }
  Eigen::ColPivHouseholderQR<CMat> qr(A);
  CVec x = qr.solve(blk.block);
  for (Eigen::Index c = 0; c < ncols; ++c) x[c] = scale[c] > 0 ? x[c] / scale[c] : cplx(0.0);
  ex.coefficients = x;
  ex.residual = (ex.modes * x - blk.block).norm() / target;

  const auto R = qr.matrixR();
  const Eigen::Index k = std::min(R.rows(), R.cols());
  const double rmax = k ? std::abs(R(0, 0)) : 0.0;
  const double rmin = k ? std::abs(R(k - 1, k - 1)) : 0.0;
  ex.condition = rmin > 0 ? rmax / rmin : std::numeric_limits<double>::infinity();
  ex.ill_conditioned = ex.condition > kIllConditioned;
  return ex;
}

// Builds the bases of every sector with a nonzero block and fits all of them.
inline ModeExpansion solve_coefficients(const Solver& solver, const std::vector<SectorBlock>& blocks, int trunc) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].block.norm() > 0.0) active.push_back(i);

  ModeExpansion ex;
  ex.trunc = trunc;
  ex.rep = solver.rep;
  std::vector<std::optional<SectorExpansion>> fits(active.size());
  parallel_for(active.size(), [&](std::size_t k) {
    const auto& blk = blocks[active[k]];
    const std::size_t pos = solver.sector_position(blk.sector);
    const SectorBasis b = solver.basis(pos);
    fits[k] = solve_sector_coefficients(blk, b, trunc, solver.sd, solver.shifts[pos]);
  });
  for (auto& f : fits) {
    if (f->ill_conditioned) {
      std::ostringstream os;
      os << "sector " << f->sector.label() << ": fit condition estimate " << f->condition;
      ex.warnings.push_back(os.str());
    }
    ex.sectors.push_back(std::move(*f));
  }
  return ex;
}

// Weights w with Tr(A · (Θ ⊗ |s^L⟩⟨s^R|)) = wᵀ Θ.
inline CVec trace_weights(const FockRep& rep, const Sector& s, const CMat& observable) {
  const auto db = static_cast<Eigen::Index>(rep.dim_b);
  const auto ds = static_cast<Eigen::Index>(rep.dim_s);
  CVec w(db * db);
  for (Eigen::Index j = 0; j < db; ++j)
    for (Eigen::Index i = 0; i < db; ++i)
      w[i + db * j] = observable(j * ds + static_cast<Eigen::Index>(s.right_index), i * ds + static_cast<Eigen::Index>(s.left_index));
  return w;
}

inline EvolutionResult evolve_observable(const ModeExpansion& ex, const CMat& observable, const std::vector<double>& times) {
  EvolutionResult res;
  res.method = "spectral";
  res.t = times;
  res.value.assign(times.size(), 0.0);
  for (const auto& s : ex.sectors) {
    if (s.coefficients.size() == 0 || s.modes.cols() == 0) continue;
    const CVec w = trace_weights(ex.rep, s.sector, observable);
    const CVec traces = s.modes.transpose() * w;
    for (std::size_t k = 0; k < times.size(); ++k) {
      cplx acc = 0.0;
      for (Eigen::Index c = 0; c < traces.size(); ++c)
        acc += s.coefficients[c] * std::exp(s.rates[c] * times[k]) * traces[c];
      res.value[k] += acc;
    }
  }
  return res;
}

// Full vectorized ρ(t) from the expansion.
inline CVec reconstruct_state(const ModeExpansion& ex, double t) {
  CVec full = CVec::Zero(static_cast<Eigen::Index>(ex.rep.dim() * ex.rep.dim()));
  for (const auto& s : ex.sectors) {
    if (s.modes.cols() == 0) continue;
    CVec weights(s.coefficients.size());
    for (Eigen::Index c = 0; c < weights.size(); ++c) weights[c] = s.coefficients[c] * std::exp(s.rates[c] * t);
    const CVec local = s.modes * weights;
    const auto idx = sector_indices(ex.rep, s.sector);
    for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] += local[static_cast<Eigen::Index>(k)];
  }
  return full;
}

// ---------------------------------------------------------------- closed forms

struct SmallZSystem {
  Eigen::Matrix4cd matrix;
  Eigen::Vector4cd rhs;
  Eigen::Vector4cd solution;  // coefficients of m = (0,0), (0,1), (1,0), (1,1)
};

// Second-order expansion of the single-mode fit on {|0⟩,|1⟩}, with its exact solution.
inline SmallZSystem small_z_system(cplx z1, const Sector& sector) {
  const double sl = sector.sL[0], sr = sector.sR[0];
  const double q = std::norm(z1);
  const double p = sl * sr;
  const cplx zc = std::conj(z1);
  SmallZSystem sys;
  sys.matrix << 1.0, z1 * sr, zc * sl, -1.0 + q * p,
      -zc * sr, 1.0 - q, -zc * zc * p, zc * (sl + sr),
      -z1 * sl, -z1 * z1 * p, 1.0 - q, z1 * (sl + sr),
      q * p, -z1 * sl, -zc * sr, 1.0 - q * (2.0 + p);
  sys.matrix *= std::exp(-q);
  sys.rhs << 0.5, 0.0, 0.0, 0.0;
  const double pref = std::exp(q) / (2.0 * (1.0 + 3.0 * q * q + 2.0 * q * q * q));
  sys.solution << 1.0 - q * (2.0 - p) + q * q * (4.0 + 2.0 * p),
      zc * (1.0 - q) * sr,
      z1 * (1.0 - q) * sl,
      q * (1.0 + 2.0 * q) * p;
  sys.solution *= pref;
  return sys;
}

// ⟨σˣ(0)⟩ · exp[−4|z₁|²(1 − e^{−t}) − 4|z₂|² t]
inline double closed_form_sigma_x(cplx z1, cplx z2, double t, double sigma_x0 = 1.0) {
  return sigma_x0 * std::exp(-4.0 * std::norm(z1) * (1.0 - std::exp(-t)) - 4.0 * std::norm(z2) * t);
}

// Slowest-mode approximation e^{−2|z₁|²}(1 − 2|z₁|² + 4|z₁|² e^{−t}).
inline double small_z_sigma_x(cplx z1, double t) {
  const double q = std::norm(z1);
  return std::exp(-2.0 * q) * (1.0 - 2.0 * q + 4.0 * q * std::exp(-t));
}

// First order in |z₁|²: 1 − 4|z₁|²(1 − e^{−t}).
inline double linear_z_sigma_x(cplx z1, double t) { return 1.0 - 4.0 * std::norm(z1) * (1.0 - std::exp(-t)); }

// L = w a + σᶻ: exp[−4/|w|² (1 − e^{−|w|² t})].
inline double weak_damping_sigma_x(cplx w, double t) {
  const double q = std::norm(w);
  return std::exp(-4.0 / q * (1.0 - std::exp(-q * t)));
}

}  // namespace thirdq
