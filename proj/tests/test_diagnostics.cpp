#include <cmath>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "ttkrylov/diagnostics.hpp"
#include "ttkrylov/operators.hpp"

using namespace ttk;
using namespace ttk::testing;

namespace {

struct Solved {
  AllInOneSystem sys;
  GmresOutcome out;
  BoundParams params;
  std::vector<double> slice_norms;
};

Solved solve_parametric(bool precondition) {
  const Grid1D g(5, -1.0, 1.0);
  const ParamSet ps = ParamSet::log_spaced(3, 1.0, 10.0);
  const ProblemInstance pb = parametric_convection_diffusion_problem(g, ps);
  AllInOneSystem sys{pb.op, std::nullopt, pb.rhs};
  if (precondition) sys.m = identity_tensorized(3, inv_laplacian_preconditioner(3, g, 4, 1e-8));
  GmresConfig cfg;
  cfg.m = cfg.maxit = precondition ? 40 : 150;
  cfg.epsilon = 1e-8;
  cfg.delta = 1e-10;
  cfg.keep_iterates = true;
  const TTVector x0 = tt_zeros(pb.rhs.modes());
  GmresOutcome out = sys.m ? tt_right_gmres(sys.a, *sys.m, sys.b, x0, cfg)
                           : tt_restarted_gmres(sys.a, sys.b, x0, cfg);
  std::vector<double> norms = slice_opnorms(sys);
  BoundParams params;
  params.p = 3;
  params.opnorm_A = out.estimated_opnorm;
  params.opnorm_A0 = *std::max_element(norms.begin(), norms.end());
  return Solved{std::move(sys), std::move(out), params, std::move(norms)};
}

}  // namespace

TEST(BackwardErrors, MatchDenseFormulas) {
  CoreFactory f(31);
  const TTOperator a = f.op({3, 4}, {3, 4}, {1, 2, 1});
  const TTOperator m = f.op({3, 4}, {3, 4}, {1, 2, 1});
  const TTVector x = f.vector({3, 4}, {1, 2, 1});
  const TTVector b = f.vector({3, 4}, {1, 2, 1});
  const Matrix da = oracle_dense(a), dm = oracle_dense(m);
  const Vector dx = oracle_dense(x), db = oracle_dense(b);

  const BackwardErrors e = backward_errors(a, x, b, 2.0);
  const double r = (db - da * dx).norm();
  EXPECT_NEAR(e.residual_norm, r, 1e-13 * r);
  EXPECT_NEAR(e.eta_b, r / db.norm(), 1e-13);
  EXPECT_NEAR(e.eta_Ab, r / (2.0 * dx.norm() + db.norm()), 1e-13);

  const BackwardErrors em = backward_errors(a, &m, x, b, 3.0);
  const double rm = (db - da * dm * dx).norm();
  EXPECT_NEAR(em.residual_norm, rm, 1e-13 * rm);
  EXPECT_NEAR(em.eta_Ab, rm / (3.0 * dx.norm() + db.norm()), 1e-13);
  EXPECT_THROW(backward_errors(a, x, tt_zeros({3, 4}), 1.0), std::invalid_argument);
}

TEST(Lemmas, NormIsSumOfSliceNormsOnRandomTensors) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CoreFactory f(seed);
    const Index d = f.pick(2, 4);
    std::vector<Index> modes(d);
    for (auto& n : modes) n = f.pick(1, 6);
    const TTVector x = f.vector(modes, f.ranks(d, 4));
    const double whole = tt_norm(x);
    double sum = 0.0;
    for (Index l = 1; l <= modes[0]; ++l) sum += std::pow(tt_norm(tt_slice_first_mode(x, l)), 2);
    EXPECT_LT(std::abs(whole * whole - sum) / (whole * whole), 1e-11) << "seed " << seed;
  }
}

TEST(Lemmas, SliceOfProductIsProductOfSlices) {
  const Grid1D g(4, -1.0, 1.0);
  const ParamSet ps = ParamSet::log_spaced(3, 1.0, 10.0);
  const HeatParts heat = heat_parametrized_parts(g);
  const TTOperator ops[] = {parametric_convection_diffusion_problem(g, ps).op,
                            all_in_one_operator(heat.b0, heat.b1, ParamSet::uniform(3, 0, 10))};
  for (const TTOperator& a : ops)
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const TTVector x = tt_random({3, 4, 4, 4}, {1, 3, 3, 2, 1}, seed);
      const TTVector ax = tt_apply(a, x);
      for (Index l = 1; l <= 3; ++l) {
        const Vector lhs = oracle_dense(tt_slice_first_mode(ax, l));
        const Vector rhs =
            oracle_dense(tt_apply(tt_op_diag_slice(a, l), tt_slice_first_mode(x, l)));
        EXPECT_LT(rel_err(lhs, rhs), 1e-11);
      }
    }
}

TEST(SlicePoints, MatchDenseSlices) {
  const Solved s = solve_parametric(false);
  const TTVector& x = s.out.solution;
  const auto pts = slice_points(s.sys, x);
  ASSERT_EQ(pts.size(), 3u);
  const Matrix a = oracle_dense(s.sys.a);
  const Vector dx = oracle_dense(x), db = oracle_dense(s.sys.b);
  const Index inner = dx.size() / 3;
  for (Index l = 0; l < 3; ++l) {
    const Matrix al = a.block(l * inner, l * inner, inner, inner);
    const Vector xl = dx.segment(l * inner, inner), bl = db.segment(l * inner, inner);
    EXPECT_NEAR(pts[l].x_norm, xl.norm(), 1e-12 * xl.norm());
    EXPECT_NEAR(pts[l].rhs_norm, bl.norm(), 1e-12);
    EXPECT_NEAR(pts[l].image_norm, (al * xl).norm(), 1e-12 * (al * xl).norm());
    EXPECT_NEAR(pts[l].residual_norm, (al * xl - bl).norm(), 1e-9 * bl.norm());
  }

  BoundParams bp;
  bp.p = 3;
  const auto errs = slice_backward_errors(s.sys, x, bp);
  const auto norms = slice_opnorms(s.sys);
  for (Index l = 0; l < 3; ++l) {
    EXPECT_DOUBLE_EQ(errs[l].eta_b, pts[l].residual_norm / pts[l].rhs_norm);
    EXPECT_DOUBLE_EQ(errs[l].eta_Ab,
                     pts[l].residual_norm / (norms[l] * pts[l].x_norm + pts[l].rhs_norm));
  }
}

TEST(BoundFactors, Formulas) {
  std::vector<SlicePoint> sl(2);
  sl[0].image_norm = 1.0;
  sl[0].x_norm = 0.5;
  sl[1].image_norm = 3.0;
  sl[1].x_norm = 2.0;
  BoundParams bp;
  bp.p = 4;
  bp.opnorm_A = 10.0;
  bp.opnorm_A0 = 4.0;
  BoundFactors f = bound_factors(2.0, sl, bp);
  EXPECT_DOUBLE_EQ(f.rho[0], (10.0 * 2.0 + 2.0) / 2.0);
  EXPECT_DOUBLE_EQ(f.rho[1], 22.0 / 4.0);
  EXPECT_DOUBLE_EQ(f.psi[0], (2.0 + 0.5) / (0.5 + 0.25));
  EXPECT_FALSE(f.rho_star.has_value());
  bp.nu = 0.5;
  bp.kappa2 = 3.0;
  f = bound_factors(2.0, sl, bp);
  EXPECT_DOUBLE_EQ(*f.rho_star, 22.0 / 1.5);
  EXPECT_DOUBLE_EQ(*f.rho_dagger, 2.0 * 4.0 / 1.5);
  bp.nu = 2.0;
  EXPECT_THROW(bound_factors(2.0, sl, bp), std::invalid_argument);
}

TEST(Stabilization, DetectsFirstFlatWindow) {
  const std::vector<std::vector<double>> s{{5, 3, 1.0, 1.02, 1.01, 1.0}, {4, 2, 2, 1.1, 1.05, 1.1}};
  const auto k = detect_stabilization(s, 3, 0.1);
  ASSERT_TRUE(k.has_value());
  EXPECT_EQ(*k, 3);
  EXPECT_FALSE(detect_stabilization(s, 3, 0.01).has_value());
  EXPECT_FALSE(detect_stabilization({{1.0, 2.0}}, 3, 0.5).has_value());
  EXPECT_THROW(detect_stabilization(s, 0, 0.1), std::invalid_argument);
}

class BoundSuite : public ::testing::TestWithParam<bool> {};

TEST_P(BoundSuite, NoViolationsAlongASolve) {
  const Solved s = solve_parametric(GetParam());
  ASSERT_TRUE(s.out.converged);
  const BoundReport rep = verify_bounds(s.sys, s.out.iterates, s.params, s.slice_norms);
  EXPECT_EQ(rep.rows.size(), s.out.iterates.size() * 3);
  for (const auto& v : rep.violations)
    ADD_FAILURE() << v.bound << " at iter " << v.iter << " ell " << v.ell << ": " << v.lhs
                  << " > " << v.rhs;
  EXPECT_LT(rep.norm_identity_error, 1e-11);
  EXPECT_GE(rep.ell_min_upsilon, 1);
  EXPECT_LE(rep.ell_max_upsilon, 3);
  for (const auto& row : rep.rows) {
    EXPECT_LE(row.eta_b_slice, std::sqrt(3.0) * row.eta_b * (1 + 1e-12));
    EXPECT_TRUE(std::isnan(row.rho_dagger));
  }
}

INSTANTIATE_TEST_SUITE_P(Preconditioning, BoundSuite, ::testing::Bool());

TEST(VerifyBounds, SameOperatorEnablesPsi) {
  const Grid1D g(5, -1.0, 1.0);
  const ProblemInstance pb = multi_rhs_problem(convection_diffusion_problem(g), 3, 3, 4);
  const AllInOneSystem sys{pb.op, std::nullopt, pb.rhs};
  GmresConfig cfg;
  cfg.m = cfg.maxit = 40;
  cfg.epsilon = 1e-8;
  cfg.delta = 1e-10;
  cfg.keep_iterates = true;
  const GmresOutcome out = tt_gmres(sys.a, sys.b, cfg);
  ASSERT_TRUE(out.converged);
  const auto norms = slice_opnorms(sys);
  BoundParams bp;
  bp.p = 3;
  bp.opnorm_A = out.estimated_opnorm;
  bp.opnorm_A0 = *std::max_element(norms.begin(), norms.end());
  BoundOptions opt;
  opt.same_operator = true;
  const BoundReport rep = verify_bounds(sys, out.iterates, bp, norms, opt);
  EXPECT_TRUE(rep.violations.empty());
  for (double v : rep.slice_opnorm) EXPECT_DOUBLE_EQ(v, rep.opnorm_A);
  EXPECT_EQ(rep.gamma.size(), 3u);
}

TEST(VerifyBounds, ReportsViolationsAndRejectsBadInput) {
  const Solved s = solve_parametric(false);
  BoundOptions strict;
  strict.slack = -0.9999;
  const BoundReport rep = verify_bounds(s.sys, s.out.iterates, s.params, s.slice_norms, strict);
  EXPECT_FALSE(rep.violations.empty());
  BoundParams wrong = s.params;
  wrong.p = 2;
  EXPECT_THROW(verify_bounds(s.sys, s.out.iterates, wrong, s.slice_norms), std::invalid_argument);
  EXPECT_THROW(verify_bounds(s.sys, s.out.iterates, s.params, {1.0}), std::invalid_argument);
  BoundParams bad = s.params;
  bad.opnorm_A = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(VerifyBounds, KappaEnablesDaggerCheck) {
  const Solved s = solve_parametric(false);
  BoundParams bp = s.params;
  bp.nu = 0.5;
  bp.kappa2 = 1e6;
  bp.opnorm_Ainv = 1e6;
  BoundOptions opt;
  opt.window = 1;
  const BoundReport rep = verify_bounds(s.sys, s.out.iterates, bp, s.slice_norms, opt);
  ASSERT_TRUE(rep.k_star.has_value());
  bool any = false;
  for (const auto& row : rep.rows) any = any || !std::isnan(row.rho_dagger);
  EXPECT_TRUE(any);
  EXPECT_DOUBLE_EQ(*rep.nu, 0.5);
}
