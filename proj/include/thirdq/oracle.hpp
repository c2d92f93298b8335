// oracle.hpp — direct integration of dρ/dt = L̂ρ on the truncated space.
//
// Two routes that share nothing with the normal-mode construction: the exponential action
// of the assembled Liouvillian, and an embedded Dormand–Prince 5(4) integrator that works on
// the density matrix with operator products only.

#pragma once

#include "thirdq/expm.hpp"
#include "thirdq/fockspace.hpp"
#include "thirdq/model.hpp"
#include "thirdq/state.hpp"
#include "thirdq/types.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

namespace thirdq {

enum class IntegratorMethod { MatrixExponential, AdaptiveRK };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::MatrixExponential;
  double rtol = 1e-9;
  double atol = 1e-11;
  int cutoff = kDefaultCutoff;
};

namespace detail {

inline void check_times(const std::vector<double>& times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw std::invalid_argument("times must be non-negative");
    if (i && times[i] < times[i - 1]) throw std::invalid_argument("times must be sorted ascending");
  }
}

struct LindbladRhs {
  SpMat H;
  std::vector<SpMat> L, Ld, LdL;

  CMat operator()(const CMat& rho) const {
    CMat out = -kI * (H * rho) + kI * (rho * H);
    for (std::size_t m = 0; m < L.size(); ++m) {
      const CMat Lrho = L[m] * rho;
      out += 2.0 * (Lrho * Ld[m]);
      out -= LdL[m] * rho;
      out -= rho * LdL[m];
    }
    return out;
  }
};

inline std::vector<CVec> integrate_rk(const ModelSpec& spec, const FockRep& rep, const CMat& rho0,
                                      const std::vector<double>& times, const IntegratorConfig& cfg) {
  const auto ops = build_model_operators(spec, rep);
  LindbladRhs f;
  f.H = ops.H;
  for (const auto& L : ops.jumps) {
    f.L.push_back(L);
    f.Ld.push_back(SpMat(L.adjoint()));
    f.LdL.push_back(SpMat(f.Ld.back() * L));
  }

  // Dormand–Prince 5(4) tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;

  std::vector<CVec> out;
  out.reserve(times.size());
  CMat rho = rho0;
  double t = 0.0;
  double h = 1e-3;
  CMat k1 = f(rho);
  long steps = 0;
  for (double target : times) {
    while (t < target) {
      if (++steps > 50'000'000) throw StepFailure("adaptive integrator exceeded its step budget", t);
      const bool last = t + h >= target;
      const double step = last ? target - t : h;
      const CMat k2 = f(rho + step * (a21 * k1));
      const CMat k3 = f(rho + step * (a31 * k1 + a32 * k2));
      const CMat k4 = f(rho + step * (a41 * k1 + a42 * k2 + a43 * k3));
      const CMat k5 = f(rho + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const CMat k6 = f(rho + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const CMat next = rho + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const CMat k7 = f(next);
      const CMat err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double acc = 0.0;
      for (Eigen::Index j = 0; j < err.cols(); ++j)
        for (Eigen::Index i = 0; i < err.rows(); ++i) {
          const double sc = cfg.atol + cfg.rtol * std::max(std::abs(rho(i, j)), std::abs(next(i, j)));
          acc += std::norm(err(i, j) / sc);
        }
      const double enorm = std::sqrt(acc / static_cast<double>(err.size()));
      if (enorm <= 1.0) {
        t = last ? target : t + step;
        rho = next;
        k1 = k7;
      }
      const double factor = enorm > 0 ? 0.9 * std::pow(enorm, -0.2) : 5.0;
      const double proposal = step * std::clamp(factor, 0.2, 5.0);
      if (enorm <= 1.0 && last) {
        h = std::max(h, proposal);
      } else {
        h = proposal;
      }
      if (h < 1e-14 * std::max(1.0, t)) {
        std::ostringstream os;
        os << "adaptive integrator cannot meet tolerance at t = " << t;
        throw StepFailure(os.str(), t);
      }
    }
    out.push_back(vec(rho));
  }
  return out;
}

}  // namespace detail

// ρ(t_k) as vectorized full-space states.
inline std::vector<CVec> integrate_master_equation(const ModelSpec& spec, const InitialState& rho0,
                                                   const std::vector<double>& times, const IntegratorConfig& cfg = {}) {
  require_valid(spec);
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) throw std::invalid_argument("rtol and atol must be positive");
  detail::check_times(times);
  const FockRep rep = build_fock_rep(spec, cfg.cutoff);
  require_valid(rho0, rep);

  if (cfg.method == IntegratorMethod::AdaptiveRK) return detail::integrate_rk(spec, rep, rho0.rho, times, cfg);

  const SpMat Lv = build_dense_liouvillian(spec, rep);
  const double nrm = norm1(Lv);
  std::vector<CVec> out;
  out.reserve(times.size());
  CVec v = vec(rho0.rho);
  double t = 0.0;
  for (double target : times) {
    v = expm_multiply(Lv, std::move(v), target - t, 1e-15, nrm);
    t = target;
    out.push_back(v);
  }
  return out;
}

}  // namespace thirdq
