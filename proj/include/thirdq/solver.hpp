// solver.hpp — the whole normal-mode pipeline for one model and cutoff.

#pragma once

#include "thirdq/fockspace.hpp"
#include "thirdq/model.hpp"
#include "thirdq/parallel.hpp"
#include "thirdq/spectral.hpp"
#include "thirdq/superop.hpp"

#include <optional>
#include <vector>

namespace thirdq {

struct Solver {
  ModelSpec spec;
  StructureMatrices sm;
  QuadraticForm qf;
  SpectralData sd;
  FockRep rep;
  SuperRep sup;
  std::vector<Sector> sectors;
  std::vector<SectorShift> shifts;

  // Everything except the per-sector bases, which cost a null-space solve each.
  static Solver build(const ModelSpec& spec, int cutoff = kDefaultCutoff) {
    require_valid(spec);
    Solver s;
    s.spec = spec;
    s.sm = build_structure_matrices(spec);
    s.qf = build_quadratic_form(s.sm, spec);
    s.sd = compute_spectral(s.qf);
    s.rep = build_fock_rep(spec, cutoff);
    s.sup = build_super_basis(s.rep);
    s.sectors = enumerate_sectors(spec);
    for (const auto& sec : s.sectors) s.shifts.push_back(sector_shift(s.qf, sec));
    return s;
  }

  std::size_t sector_position(const Sector& sec) const {
    for (std::size_t i = 0; i < sectors.size(); ++i)
      if (sectors[i].left_index == sec.left_index && sectors[i].right_index == sec.right_index) return i;
    throw ModelError("sector does not belong to this model");
  }

  SectorBasis basis(std::size_t i, bool with_ness = true) const {
    if (with_ness && !sd.stable)
      throw Unstable("rapidities with negative real part: no steady state", sd.betas.real().minCoeff());
    SectorBasis b = build_zeta(sup, sd, shifts[i]);
    if (with_ness) find_ness(b);
    return b;
  }

  // Bases for the requested sector positions, built concurrently.
  std::vector<SectorBasis> bases(const std::vector<std::size_t>& which, bool with_ness = true) const {
    std::vector<std::optional<SectorBasis>> tmp(which.size());
    parallel_for(which.size(), [&](std::size_t k) { tmp[k] = basis(which[k], with_ness); });
    std::vector<SectorBasis> out;
    out.reserve(which.size());
    for (auto& b : tmp) out.push_back(std::move(*b));
    return out;
  }
};

}  // namespace thirdq
