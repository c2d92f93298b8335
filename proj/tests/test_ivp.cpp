#include "helpers.hpp"
#include "thirdq/oracle.hpp"
#include "thirdq/reproduce.hpp"

#include <gtest/gtest.h>

using namespace thirdq;
using namespace thirdq::testing;

namespace {

constexpr int kCutoff = 20;

// One setup per z shared across the suite.
const PaperSetup& setup_for(double z) {
  static std::map<double, PaperSetup> cache;
  auto it = cache.find(z);
  if (it == cache.end()) it = cache.emplace(z, PaperSetup::build(example_one(z), kCutoff)).first;
  return it->second;
}

}  // namespace

TEST(MultiIndices, LexicographicOrder) {
  const auto m = multi_indices(2, 3);
  ASSERT_EQ(m.size(), 9u);
  EXPECT_EQ(m[0], (std::vector<int>{0, 0}));
  EXPECT_EQ(m[1], (std::vector<int>{0, 1}));
  EXPECT_EQ(m[3], (std::vector<int>{1, 0}));
  EXPECT_EQ(m[8], (std::vector<int>{2, 2}));
  EXPECT_EQ(multi_indices(4, 2).size(), 16u);
  EXPECT_TRUE(multi_indices(2, 0).empty());
}

TEST(TimeGrid, Shapes) {
  const auto g = default_time_grid();
  ASSERT_EQ(g.size(), 201u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_NEAR(g[1], 1e-2, 1e-15);
  EXPECT_NEAR(g.back(), 10.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  const auto l = linear_time_grid(0.0, 1.0, 11);
  EXPECT_NEAR(l[5], 0.5, 1e-15);
}

TEST(Projection, SplitsIntoSectorBlocks) {
  const auto spec = example_one(0.2);
  const auto rep = build_fock_rep(spec, 6);
  const auto blocks = project_initial_state(paper_initial_state(spec, 6), spec, rep);
  ASSERT_EQ(blocks.size(), 4u);
  for (const auto& b : blocks) {
    EXPECT_NEAR(b.block[0].real(), 0.5, 1e-15);
    EXPECT_NEAR(b.block.norm(), 0.5, 1e-15);
  }
  std::mt19937 rng(3);
  CMat r = random_matrix(rng, 12, 12);
  r = r * r.adjoint();
  r /= r.trace();
  const auto st = InitialState::explicit_matrix(r);
  CVec sum = CVec::Zero(144);
  for (const auto& b : project_initial_state(st, spec, rep)) sum += embed_sector_vector(rep, b.sector, b.block);
  EXPECT_LT((sum - vec(r)).norm(), 1e-15);
}

TEST(Coefficients, ZeroCouplingIsVacuumOnly) {
  const auto spec = example_one(0.0);
  const auto solver = Solver::build(spec, 8);
  const auto blocks = project_initial_state(paper_initial_state(spec, 8), spec, solver.rep);
  const auto ex = solve_coefficients(solver, blocks, 3);
  for (const auto& s : ex.sectors) {
    EXPECT_NEAR(std::abs(s.coefficients[0]), 0.5, 1e-13);
    EXPECT_LT(s.coefficients.tail(s.coefficients.size() - 1).norm(), 1e-13);
    EXPECT_LT(s.residual, 1e-13);
  }
}

TEST(SmallZ, ClosedFormSolvesTheSystem) {
  std::mt19937 rng(8);
  const auto sectors = enumerate_sectors(example_one(0.1));
  for (int k = 0; k < 10; ++k) {
    const cplx z = random_complex(rng, 0.5);
    for (const auto& s : sectors) {
      const auto sys = small_z_system(z, s);
      EXPECT_LT((sys.matrix * sys.solution - sys.rhs).norm(), 1e-12) << z << " " << s.label();
    }
  }
}

// The four-mode system on occupations {0, 1} agrees with the exact one to third order.
TEST(SmallZ, AgreesWithTruncatedFit) {
  for (double z : {0.02, 0.04, 0.08}) {
    const auto spec = example_one(z);
    const auto solver = Solver::build(spec, 10);
    const auto db = static_cast<Eigen::Index>(solver.rep.dim_b);
    const std::vector<Eigen::Index> rows{0, 1, db, db + 1};
    for (std::size_t i = 0; i < solver.sectors.size(); ++i) {
      const auto b = solver.basis(i);
      SectorBlock blk{solver.sectors[i], CVec::Zero(db * db)};
      const auto fit = solve_sector_coefficients(blk, b, 2, solver.sd, solver.shifts[i]);
      const CMat A = fit.modes(rows, Eigen::all);
      Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();
      rhs[0] = 0.5;
      const Eigen::Vector4cd x = A.fullPivLu().solve(rhs);
      const auto sys = small_z_system(z, solver.sectors[i]);
      EXPECT_LT((x - sys.solution).norm(), 5.0 * z * z * z) << z << " " << solver.sectors[i].label();
    }
  }
}

TEST(Fit, ResidualShrinksWithTrunc) {
  const auto& setup = setup_for(0.2);
  double last = 1.0;
  for (int trunc : {1, 2, 4, 8, 12}) {
    const auto ex = setup.fit(trunc);
    EXPECT_LE(ex.max_residual(), last * (1.0 + 1e-9)) << trunc;
    last = ex.max_residual();
  }
  EXPECT_LT(last, 1e-10);
}

TEST(Fit, SpectralMatchesClosedForm) {
  const auto& setup = setup_for(0.2);
  const auto ex = setup.fit(12);
  const CMat sx = sigma_x(setup.solver.rep, setup.solver.spec);
  const auto times = default_time_grid(10.0, 40);
  const auto r = evolve_observable(ex, sx, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_NEAR(r.value[k].real(), closed_form_sigma_x(0.2, 0.0, times[k]), 1e-9) << times[k];
    EXPECT_LT(std::abs(r.value[k].imag()), 1e-12);
  }
  EXPECT_NEAR(r.value[0].real(), 1.0, 1e-12);
  const auto late = evolve_observable(ex, sx, {60.0});
  EXPECT_NEAR(late.value[0].real(), std::exp(-4.0 * 0.04), 1e-10);
}

TEST(Fit, ConvergesFasterForSmallCoupling) {
  const auto err = [](double z, int trunc) {
    const auto& setup = setup_for(z);
    const CMat sx = sigma_x(setup.solver.rep, setup.solver.spec);
    const auto r = evolve_observable(setup.fit(trunc), sx, {0.0, 1.0});
    return std::max(std::abs(r.value[0] - 1.0), std::abs(r.value[1] - closed_form_sigma_x(z, 0.0, 1.0)));
  };
  EXPECT_LT(err(0.2, 3), err(0.6, 3));
  EXPECT_LT(err(0.6, 6), err(0.6, 3));
  EXPECT_LT(err(0.6, 10), 1e-6);
}

TEST(Fit, ObservableInvariants) {
  const auto& setup = setup_for(0.2);
  const auto& rep = setup.solver.rep;
  const auto& spec = setup.solver.spec;
  const auto ex = setup.fit(10);
  const auto times = linear_time_grid(0.0, 8.0, 9);
  const auto id = evolve_observable(ex, identity_observable(rep), times);
  const auto sy = evolve_observable(ex, sigma_y(rep, spec), times);
  const auto sz = evolve_observable(ex, sigma_z(rep, spec), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_NEAR(std::abs(id.value[k] - 1.0), 0.0, 1e-8);
    EXPECT_LT(std::abs(sy.value[k]), 1e-8);
    EXPECT_LT(std::abs(sz.value[k]), 1e-8);
  }
}

TEST(Fit, ReconstructionIsAStateAndMatchesTraces) {
  const auto& setup = setup_for(0.2);
  const auto& rep = setup.solver.rep;
  const auto ex = setup.fit(10);
  const CMat sx = sigma_x(rep, setup.solver.spec);
  for (double t : {0.0, 0.5, 3.0}) {
    const CVec v = reconstruct_state(ex, t);
    const CMat rho = unvec(v, static_cast<Eigen::Index>(rep.dim()));
    EXPECT_LT(max_abs(rho - rho.adjoint()), 1e-9);
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-8);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<CMat>(0.5 * (rho + rho.adjoint())).eigenvalues().minCoeff(), -1e-7);
    EXPECT_LT(std::abs(expectation(v, sx) - evolve_observable(ex, sx, {t}).value[0]), 1e-8);
  }
  const CVec v0 = reconstruct_state(ex, 0.0);
  EXPECT_LT((v0 - vec(CMat(paper_initial_state(setup.solver.spec, kCutoff).rho))).norm(), 1e-9);
}

TEST(Fit, AgreesWithOracleOnCoupledModel) {
  const auto spec = mild_coupled_model();
  const int cutoff = 20;
  const auto solver = Solver::build(spec, cutoff);
  const auto rho0 = InitialState::product(InitialState::fock(0, cutoff), spin_x_plus(spec));
  const auto ex = solve_coefficients(solver, project_initial_state(rho0, spec, solver.rep), 12);
  const CMat sx = sigma_x(solver.rep, spec), n = number_operator(solver.rep);
  const std::vector<double> times{0.0, 0.3, 1.0, 4.0};
  IntegratorConfig cfg;
  cfg.cutoff = cutoff;
  const auto states = integrate_master_equation(spec, rho0, times, cfg);
  const auto rs = evolve_observable(ex, sx, times), rn = evolve_observable(ex, n, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_LT(std::abs(rs.value[k] - expectation(states[k], sx)), 1e-6) << times[k];
    EXPECT_LT(std::abs(rn.value[k] - expectation(states[k], n)), 1e-6) << times[k];
  }
}

TEST(ClosedForms, LimitsAndConsistency) {
  EXPECT_EQ(closed_form_sigma_x(0.3, 0.2, 0.0), 1.0);
  EXPECT_NEAR(closed_form_sigma_x(0.3, 0.0, 200.0), std::exp(-0.36), 1e-15);
  EXPECT_NEAR(closed_form_sigma_x(0.0, 0.4, 2.0), std::exp(-1.28), 1e-15);
  EXPECT_NEAR(closed_form_sigma_x(0.3, 0.0, 1.0, -0.5), -0.5 * closed_form_sigma_x(0.3, 0.0, 1.0), 1e-16);
  for (double t : {0.1, 1.0, 5.0}) {
    EXPECT_NEAR(linear_z_sigma_x(0.01, t), closed_form_sigma_x(0.01, 0.0, t), 2e-7);
    EXPECT_NEAR(small_z_sigma_x(0.05, t), closed_form_sigma_x(0.05, 0.0, t), 1e-4);
    // weak damping is example_one scaled: z₁ = 1/w with time measured in units of 1/w²
    EXPECT_NEAR(weak_damping_sigma_x(0.5, t), closed_form_sigma_x(2.0, 0.0, 0.25 * t), 1e-14);
  }
}
