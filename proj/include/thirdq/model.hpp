// model.hpp — boson–spin model definition, validation and the jump-operator Gram matrices.
//
// H = a†·H a + a·K a + a†·K̄ a† + σ·Ω a + a†·Ω† σ
// L_μ = l_μ·a + k_μ·a† + w_μ·σ
//
// σ_j are diagonal in the canonical spin basis; site j has the eigenvalues spin_spectra[j].

#pragma once

#include "thirdq/types.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace thirdq {

struct JumpOperator {
  CVec l;
  CVec k;
  CVec w;
};

struct ModelSpec {
  int n = 1;
  CMat H;
  CMat K;
  CMat Omega;
  std::vector<JumpOperator> jumps;
  std::vector<std::vector<double>> spin_spectra;

  // n modes, zero matrices, no jumps, Pauli-z spectra.
  static ModelSpec empty(int n) {
    ModelSpec m;
    m.n = n;
    m.H = CMat::Zero(n, n);
    m.K = CMat::Zero(n, n);
    m.Omega = CMat::Zero(n, n);
    m.spin_spectra.assign(static_cast<std::size_t>(n), {+1.0, -1.0});
    return m;
  }

  JumpOperator& add_jump(CVec l, CVec k, CVec w) {
    jumps.push_back({std::move(l), std::move(k), std::move(w)});
    return jumps.back();
  }
};

struct StructureMatrices {
  CMat M, N, L, W, E, F;
};

// Joint eigenvalue block of (σ^L, σ^R). The indices address the spin basis, so repeated
// eigenvalues inside one spectrum still give distinct sectors.
struct Sector {
  std::size_t left_index = 0;
  std::size_t right_index = 0;
  RVec sL;
  RVec sR;

  std::string label() const {
    std::ostringstream os;
    auto put = [&os](const RVec& v, bool first) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!first || i > 0) os << ',';
        os << (v[i] >= 0 ? "+" : "") << v[i];
      }
    };
    put(sL, true);
    put(sR, sL.size() == 0);
    return os.str();
  }
};

struct Violation {
  std::string message;
  double deviation = 0.0;
};

inline constexpr double kInputTolerance = 1e-12;

// Dimension of the spin Hilbert space: product of the spectrum sizes.
inline std::size_t spin_dimension(const ModelSpec& spec) {
  std::size_t d = 1;
  for (const auto& s : spec.spin_spectra) d *= s.size();
  return d;
}

// Eigenvalues of (σ_1..σ_n) on spin basis state `index`; site 0 is the slowest digit.
inline RVec spin_values(const ModelSpec& spec, std::size_t index) {
  RVec v(spec.n);
  for (int j = spec.n - 1; j >= 0; --j) {
    const auto& spectrum = spec.spin_spectra[static_cast<std::size_t>(j)];
    v[j] = spectrum[index % spectrum.size()];
    index /= spectrum.size();
  }
  return v;
}

inline std::vector<Violation> validate_model(const ModelSpec& spec) {
  std::vector<Violation> out;
  auto add = [&out](std::string msg, double dev) { out.push_back({std::move(msg), dev}); };
  auto fmt = [](const std::string& head, double dev) {
    std::ostringstream os;
    os << head << ", deviation " << dev;
    return os.str();
  };

  if (spec.n < 1) {
    add("n must be positive", static_cast<double>(spec.n));
    return out;
  }
  const Eigen::Index n = spec.n;
  bool shapes_ok = true;
  auto check_shape = [&](const CMat& m, const char* name) {
    if (m.rows() != n || m.cols() != n) {
      std::ostringstream os;
      os << name << " has shape " << m.rows() << "x" << m.cols() << ", expected " << n << "x" << n;
      add(os.str(), 0.0);
      shapes_ok = false;
    }
  };
  check_shape(spec.H, "H");
  check_shape(spec.K, "K");
  check_shape(spec.Omega, "Omega");

  if (shapes_ok) {
    const double h_dev = max_abs(spec.H - spec.H.adjoint());
    if (h_dev > kInputTolerance * std::max(1.0, max_abs(spec.H)))
      add(fmt("H not Hermitian", h_dev), h_dev);
    const double k_dev = max_abs(spec.K - spec.K.transpose());
    if (k_dev > kInputTolerance * std::max(1.0, max_abs(spec.K)))
      add(fmt("K not symmetric", k_dev), k_dev);
    for (const CMat* m : {&spec.H, &spec.K, &spec.Omega})
      if (!m->allFinite()) add("matrix entries must be finite", 0.0);
  }

  for (std::size_t mu = 0; mu < spec.jumps.size(); ++mu) {
    const auto& j = spec.jumps[mu];
    if (j.l.size() != n || j.k.size() != n || j.w.size() != n) {
      std::ostringstream os;
      os << "jump " << mu << " vectors must have length " << n;
      add(os.str(), 0.0);
    } else if (!j.l.allFinite() || !j.k.allFinite() || !j.w.allFinite()) {
      std::ostringstream os;
      os << "jump " << mu << " has non-finite entries";
      add(os.str(), 0.0);
    }
  }

  if (spec.spin_spectra.size() != static_cast<std::size_t>(n)) {
    std::ostringstream os;
    os << "expected " << n << " spin spectra, got " << spec.spin_spectra.size();
    add(os.str(), 0.0);
  } else {
    for (std::size_t j = 0; j < spec.spin_spectra.size(); ++j) {
      const auto& s = spec.spin_spectra[j];
      if (s.empty()) add("spin spectrum " + std::to_string(j) + " is empty", 0.0);
      for (double v : s)
        if (!std::isfinite(v)) add("spin spectrum " + std::to_string(j) + " is not finite", 0.0);
    }
  }
  return out;
}

// Throws ModelError listing every violation.
inline void require_valid(const ModelSpec& spec) {
  auto v = validate_model(spec);
  if (v.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& x : v) msg += " " + x.message + ";";
  throw ModelError(msg);
}

inline StructureMatrices build_structure_matrices(const ModelSpec& spec) {
  const Eigen::Index n = spec.n;
  StructureMatrices sm{CMat::Zero(n, n), CMat::Zero(n, n), CMat::Zero(n, n),
                       CMat::Zero(n, n), CMat::Zero(n, n), CMat::Zero(n, n)};
  for (const auto& j : spec.jumps) {
    if (j.l.size() != n || j.k.size() != n || j.w.size() != n)
      throw ModelError("jump operator vector length does not match n");
    // u ⊗ v̄ is the outer product u v†.
    sm.M += j.l * j.l.adjoint();
    sm.N += j.k * j.k.adjoint();
    sm.L += j.l * j.k.adjoint();
    sm.W += j.w * j.w.adjoint();
    sm.E += j.l * j.w.adjoint();
    sm.F += j.k * j.w.adjoint();
  }
  return sm;
}

// Left label varies slowest; within a label, site 0 is the slowest digit.
inline std::vector<Sector> enumerate_sectors(const ModelSpec& spec) {
  const std::size_t ds = spin_dimension(spec);
  std::vector<Sector> out;
  out.reserve(ds * ds);
  for (std::size_t l = 0; l < ds; ++l)
    for (std::size_t r = 0; r < ds; ++r) out.push_back({l, r, spin_values(spec, l), spin_values(spec, r)});
  return out;
}

// Parses "+1,-1" (left labels, then right labels) against the model's sectors.
inline Sector find_sector(const ModelSpec& spec, const std::vector<double>& labels) {
  if (labels.size() != static_cast<std::size_t>(2 * spec.n))
    throw ModelError("sector needs " + std::to_string(2 * spec.n) + " eigenvalues");
  for (const auto& s : enumerate_sectors(spec)) {
    bool match = true;
    for (int j = 0; j < spec.n; ++j) {
      match = match && std::abs(s.sL[j] - labels[static_cast<std::size_t>(j)]) < 1e-12 &&
              std::abs(s.sR[j] - labels[static_cast<std::size_t>(spec.n + j)]) < 1e-12;
    }
    if (match) return s;
  }
  throw ModelError("sector labels are not eigenvalues of the spin operators");
}

// n = 1, H = 0, L₁ = a + z₁σᶻ.
inline ModelSpec example_one(cplx z1) {
  auto m = ModelSpec::empty(1);
  m.add_jump(CVec::Constant(1, 1.0), CVec::Zero(1), CVec::Constant(1, z1));
  return m;
}

// example_one plus the pure dephasing channel L₂ = z₂σᶻ.
inline ModelSpec example_two(cplx z1, cplx z2) {
  auto m = example_one(z1);
  m.add_jump(CVec::Zero(1), CVec::Zero(1), CVec::Constant(1, z2));
  return m;
}

// L₁ = w·a + σᶻ; the weak-damping limit of example_one with z₁ = 1/w.
inline ModelSpec weak_damping_model(cplx w) {
  auto m = ModelSpec::empty(1);
  m.add_jump(CVec::Constant(1, w), CVec::Zero(1), CVec::Constant(1, 1.0));
  return m;
}

}  // namespace thirdq
