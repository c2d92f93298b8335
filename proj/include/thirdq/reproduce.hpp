// reproduce.hpp — datasets behind the worked-example figures.
//
// fig1: max_m |c_m(trunc) − c_m(trunc0)| per sector, columns z1,sL,sR,trunc,diff
// fig2: ⟨σˣ(t)⟩ curves, columns t,value,method; plus the closed-form discrepancy of the
//       spectral curve against trunc, columns trunc,t,discrepancy
// fig3: dephasing sweep, columns z2,t,value,method

#pragma once

#include "thirdq/io.hpp"
#include "thirdq/ivp.hpp"
#include "thirdq/oracle.hpp"
#include "thirdq/solver.hpp"

#include <map>
#include <vector>

namespace thirdq {

// ρ₀ = |0⟩⟨0| ⊗ ½(I + σˣ)
inline InitialState paper_initial_state(const ModelSpec& spec, int cutoff) {
  return InitialState::product(InitialState::fock(0, cutoff, spec.n), spin_x_plus(spec));
}

// All sector bases plus the sector blocks of the paper's initial state, built once and
// refitted at any trunc.
struct PaperSetup {
  Solver solver;
  std::vector<SectorBlock> blocks;
  std::vector<SectorBasis> bases;

  static PaperSetup build(const ModelSpec& spec, int cutoff) {
    PaperSetup p{Solver::build(spec, cutoff), {}, {}};
    p.blocks = project_initial_state(paper_initial_state(spec, cutoff), spec, p.solver.rep);
    std::vector<std::size_t> all(p.solver.sectors.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    p.bases = p.solver.bases(all);
    return p;
  }

  ModeExpansion fit(int trunc) const {
    ModeExpansion ex;
    ex.trunc = trunc;
    ex.rep = solver.rep;
    std::vector<std::optional<SectorExpansion>> fits(blocks.size());
    parallel_for(blocks.size(), [&](std::size_t i) {
      fits[i] = solve_sector_coefficients(blocks[i], bases[i], trunc, solver.sd, solver.shifts[i]);
    });
    for (auto& f : fits) ex.sectors.push_back(std::move(*f));
    return ex;
  }
};

inline Table fig1_dataset(const std::vector<double>& z1s = {0.2, 1.0}, int cutoff = kDefaultCutoff,
                          int trunc_max = 24, int trunc0 = 30) {
  Table t;
  t.columns = {"z1", "sL", "sR", "trunc", "diff"};
  for (double z1 : z1s) {
    const auto setup = PaperSetup::build(example_one(z1), cutoff);
    const ModeExpansion ref = setup.fit(trunc0);
    for (int trunc = 1; trunc <= trunc_max; ++trunc) {
      const ModeExpansion ex = setup.fit(trunc);
      for (std::size_t s = 0; s < ex.sectors.size(); ++s) {
        const auto& cur = ex.sectors[s];
        const auto& full = ref.sectors[s];
        double diff = 0.0;
        for (std::size_t c = 0; c < cur.indices.size(); ++c) {
          Eigen::Index rc = 0;
          for (int m : cur.indices[c]) rc = rc * trunc0 + m;
          diff = std::max(diff, std::abs(cur.coefficients[static_cast<Eigen::Index>(c)] - full.coefficients[rc]));
        }
        t.add({z1, cur.sector.sL[0], cur.sector.sR[0], static_cast<long long>(trunc), diff});
      }
    }
  }
  return t;
}

struct Fig2Data {
  Table curves;
  Table discrepancy;
};

inline Fig2Data fig2_dataset(double z1 = 0.2, int cutoff = kDefaultCutoff, int trunc = kDefaultTrunc,
                             const std::vector<double>& times = default_time_grid(), int trunc_max = 24,
                             const std::vector<double>& probe_times = {0.1, 1.0, 10.0}) {
  const auto spec = example_one(z1);
  const auto setup = PaperSetup::build(spec, cutoff);
  const CMat sx = sigma_x(setup.solver.rep, spec);

  Fig2Data out;
  out.curves.columns = {"t", "value", "method"};
  const auto spectral = evolve_observable(setup.fit(trunc), sx, times);
  IntegratorConfig cfg;
  cfg.cutoff = cutoff;
  const auto states = integrate_master_equation(spec, paper_initial_state(spec, cutoff), times, cfg);
  for (std::size_t k = 0; k < times.size(); ++k) out.curves.add({times[k], spectral.value[k].real(), std::string("spectral")});
  for (std::size_t k = 0; k < times.size(); ++k)
    out.curves.add({times[k], expectation(states[k], sx).real(), std::string("oracle")});
  for (double t : times) out.curves.add({t, closed_form_sigma_x(z1, 0.0, t), std::string("closed_form")});
  for (double t : times) out.curves.add({t, small_z_sigma_x(z1, t), std::string("small_z_approx")});

  out.discrepancy.columns = {"trunc", "t", "discrepancy"};
  for (int k = 1; k <= trunc_max; ++k) {
    const auto r = evolve_observable(setup.fit(k), sx, probe_times);
    for (std::size_t i = 0; i < probe_times.size(); ++i)
      out.discrepancy.add({static_cast<long long>(k), probe_times[i],
                           std::abs(r.value[i] - closed_form_sigma_x(z1, 0.0, probe_times[i]))});
  }
  return out;
}

inline Table fig3_dataset(double z1 = 0.2, const std::vector<double>& z2s = {0.0, 0.1, 0.2, 0.4},
                          const std::vector<double>& times = default_time_grid(), int cutoff = kDefaultCutoff) {
  Table t;
  t.columns = {"z2", "t", "value", "method"};
  for (double z2 : z2s) {
    const auto spec = example_two(z1, z2);
    IntegratorConfig cfg;
    cfg.cutoff = cutoff;
    const auto rep = build_fock_rep(spec, cutoff);
    const CMat sx = sigma_x(rep, spec);
    const auto states = integrate_master_equation(spec, paper_initial_state(spec, cutoff), times, cfg);
    for (double tk : times) t.add({z2, tk, closed_form_sigma_x(z1, z2, tk), std::string("closed_form")});
    for (std::size_t k = 0; k < times.size(); ++k)
      t.add({z2, times[k], expectation(states[k], sx).real(), std::string("oracle")});
  }
  return t;
}

}  // namespace thirdq
