#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "oracle.hpp"
#include "ttkrylov/operators.hpp"

using namespace ttk;
using namespace ttk::testing;

namespace {

Index at(Index n, Index i, Index j, Index k) { return (i * n + j) * n + k; }

Matrix kron3(const Matrix& a, const Matrix& b, const Matrix& c) {
  return Eigen::kroneckerProduct(Matrix(Eigen::kroneckerProduct(a, b)), c).eval();
}

/// Seven-point −Δ plus the two convection terms, assembled node by node.
Matrix stencil_convdiff(const Grid1D& g, bool diffusion, bool convection) {
  const Index n = g.n;
  const double h = g.h();
  Matrix a = Matrix::Zero(n * n * n, n * n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) {
        const Index row = at(n, i, j, k);
        const double x = g.node(i + 1), y = g.node(j + 1);
        if (diffusion) {
          a(row, row) += 6.0 / (h * h);
          for (int s : {-1, 1}) {
            if (i + s >= 0 && i + s < n) a(row, at(n, i + s, j, k)) -= 1.0 / (h * h);
            if (j + s >= 0 && j + s < n) a(row, at(n, i, j + s, k)) -= 1.0 / (h * h);
            if (k + s >= 0 && k + s < n) a(row, at(n, i, j, k + s)) -= 1.0 / (h * h);
          }
        }
        if (convection) {
          const double cx = 2.0 * y * (1.0 - x * x) / (2.0 * h);
          const double cy = -2.0 * x * (1.0 - y * y) / (2.0 * h);
          if (i + 1 < n) a(row, at(n, i + 1, j, k)) += cx;
          if (i > 0) a(row, at(n, i - 1, j, k)) -= cx;
          if (j + 1 < n) a(row, at(n, i, j + 1, k)) += cy;
          if (j > 0) a(row, at(n, i, j - 1, k)) -= cy;
        }
      }
  return a;
}

}  // namespace

TEST(Grid, NodesAndSpacing) {
  const Grid1D g(3, -1.0, 1.0);
  EXPECT_DOUBLE_EQ(g.h(), 0.5);
  EXPECT_DOUBLE_EQ(g.node(1), -0.5);
  EXPECT_DOUBLE_EQ(g.nodes()(2), 0.5);
  EXPECT_THROW(Grid1D(1, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid1D(4, 1.0, 1.0), std::invalid_argument);
}

TEST(ParamSet, LogAndUniformSpacing) {
  const ParamSet l = ParamSet::log_spaced(3, 1.0, 100.0);
  ASSERT_EQ(l.size(), 3);
  EXPECT_DOUBLE_EQ(l.values[0], 1.0);
  EXPECT_NEAR(l.values[1], 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(l.values[2], 100.0);
  const ParamSet u = ParamSet::uniform(5, 0.0, 10.0);
  EXPECT_DOUBLE_EQ(u.values[1], 2.5);
  EXPECT_EQ(u.distribution, ParamDistribution::Uniform);
  EXPECT_THROW(ParamSet::log_spaced(3, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ParamSet::uniform(0, 0.0, 1.0), std::invalid_argument);
}

TEST(Operators, LaplacianMatchesStencil) {
  const Grid1D g(5, 0.0, 1.0);
  const TTOperator lap = tt_neg_laplacian(3, g);
  EXPECT_EQ((std::vector<Index>{1, 2, 2, 1}), lap.ranks());
  EXPECT_LT(rel_err(oracle_dense(lap), stencil_convdiff(g, true, false)), 1e-14);
}

TEST(Operators, LaplaceLikeHasRankTwo) {
  CoreFactory f(2);
  std::vector<Matrix> l, m, r;
  for (Index n : {2, 3, 2, 3}) {
    l.push_back(f.matrix(n, n));
    m.push_back(f.matrix(n, n));
    r.push_back(f.matrix(n, n));
  }
  const TTOperator op = laplace_like(l, m, r);
  EXPECT_EQ((std::vector<Index>{1, 2, 2, 2, 1}), op.ranks());
  Matrix want = Matrix::Zero(36, 36);
  for (std::size_t k = 0; k < 4; ++k) {
    Matrix term = Matrix::Ones(1, 1);
    for (std::size_t j = 0; j < 4; ++j) {
      const Matrix& fac = j < k ? l[j] : (j == k ? m[j] : r[j]);
      term = Eigen::kroneckerProduct(term, fac).eval();
    }
    want += term;
  }
  EXPECT_LT(rel_err(oracle_dense(op), want), 1e-13);
}

TEST(Operators, ConvectionDiffusionMatchesStencil) {
  const Grid1D g(6, -1.0, 1.0);
  const ProblemInstance pb = convection_diffusion_problem(g);
  EXPECT_LT(rel_err(oracle_dense(convection_operator(g)), stencil_convdiff(g, false, true)),
            1e-14);
  EXPECT_LT(rel_err(oracle_dense(pb.op), stencil_convdiff(g, true, true)), 1e-14);
}

TEST(Operators, ConvectionDiffusionRhsLiftsFaceValue) {
  // Boundary value u = 1 on y = 1 and 0 elsewhere moves to the nodes with j = n.
  const Grid1D g(6, -1.0, 1.0);
  const Index n = g.n;
  const double h = g.h();
  const Vector rhs = oracle_dense(convection_diffusion_rhs(g, 1.0));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) {
        double want = 0.0;
        if (j == n - 1) {
          const double x = g.node(i + 1), y = g.node(n);
          want = 1.0 / (h * h) + 2.0 * x * (1.0 - y * y) / (2.0 * h);
        }
        EXPECT_NEAR(rhs(at(n, i, j, k)), want, 1e-12 * (1.0 / (h * h)));
      }
}

TEST(Operators, PoissonResidualVanishesAwayFromOriginFaces) {
  const Grid1D g(7, 0.0, 1.0);
  const ProblemInstance pb = poisson_problem(g, 3);
  ASSERT_TRUE(pb.analytic_solution.has_value());
  const Vector u = oracle_dense(*pb.analytic_solution);
  const Vector r = oracle_dense(pb.op) * u - oracle_dense(pb.rhs);
  const Index n = g.n;
  double interior = 0.0, face = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) {
        const double v = std::abs(r(at(n, i, j, k)));
        if (i == 0 || j == 0 || k == 0)
          face = std::max(face, v);
        else
          interior = std::max(interior, v);
      }
  EXPECT_LT(interior, 1e-9);
  EXPECT_GT(face, 1.0);
}

TEST(Operators, PreconditionerMatchesDenseExponentialSum) {
  const Grid1D g(6, 0.0, 1.0);
  const Index q = 3;
  const Matrix lap = laplacian_1d(g);
  const double xi = std::numbers::pi / std::sqrt(static_cast<double>(q));
  Matrix want = Matrix::Zero(216, 216);
  for (Index k = -q; k <= q; ++k) {
    const double t = std::exp(static_cast<double>(k) * xi);
    const Matrix e = (t * lap).exp();
    want += xi * t * kron3(e, e, e);
  }
  const TTOperator m = inv_laplacian_preconditioner(3, g, q, 0.0);
  EXPECT_LT(rel_err(oracle_dense(m), want), 1e-11);
  const Matrix dm = oracle_dense(m);
  EXPECT_LT((dm - dm.transpose()).norm(), 1e-12 * dm.norm());
}

TEST(Operators, PreconditionerImprovesWithAddends) {
  const Grid1D g(7, 0.0, 1.0);
  const Matrix a = oracle_dense(tt_neg_laplacian(3, g));
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  double prev = 1e300;
  for (Index q : {2, 8, 16}) {
    const Matrix m = oracle_dense(inv_laplacian_preconditioner(3, g, q, 1e-12));
    const double err = (id - a * m).operatorNorm();
    EXPECT_LT(err, prev) << "q = " << q;
    prev = err;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(Operators, DefaultAddends) {
  EXPECT_EQ(default_addends(15), 4);
  EXPECT_EQ(default_addends(63), 16);
  EXPECT_EQ(default_addends(2), 1);
}

TEST(Operators, AllInOneSlicesAreAffine) {
  const Grid1D g(4, -1.0, 1.0);
  const ParamSet params = ParamSet::log_spaced(3, 1.0, 10.0);
  const TTOperator b0 = convection_operator(g);
  const TTOperator b1 = tt_neg_laplacian(3, g);
  const TTOperator a = all_in_one_operator(b0, b1, params);
  const Matrix d0 = oracle_dense(b0), d1 = oracle_dense(b1);
  const Matrix da = oracle_dense(a);
  const Index inner = d0.rows();
  for (Index l = 0; l < 3; ++l) {
    const Matrix want = d0 + params.values[l] * d1;
    EXPECT_LT(rel_err(oracle_dense(tt_op_diag_slice(a, l + 1)), want), 1e-14);
    for (Index m = 0; m < 3; ++m) {
      if (m == l) continue;
      EXPECT_EQ(da.block(l * inner, m * inner, inner, inner).norm(), 0.0);
    }
  }
}

TEST(Operators, IdentityTensorizedIsBlockDiagonal) {
  CoreFactory f(4);
  const TTOperator c = f.op({2, 3}, {2, 3}, {1, 2, 1});
  const Matrix want = Eigen::kroneckerProduct(Matrix::Identity(3, 3), oracle_dense(c)).eval();
  EXPECT_LT(rel_err(oracle_dense(identity_tensorized(3, c)), want), 1e-15);
}

TEST(Operators, AllInOneRhsStacksParts) {
  CoreFactory f(6);
  std::vector<TTVector> parts{f.vector({2, 3}, {1, 2, 1}), f.vector({2, 3}, {1, 1, 1}),
                              f.vector({2, 3}, {1, 3, 1})};
  const Vector all = oracle_dense(all_in_one_rhs(parts));
  for (Index l = 0; l < 3; ++l)
    EXPECT_LT(rel_err(all.segment(l * 6, 6), oracle_dense(parts[l])), 1e-15);
  parts.push_back(f.vector({3, 2}, {1, 1, 1}));
  EXPECT_THROW(all_in_one_rhs(parts), ShapeError);
}

TEST(Operators, ParametricProblemHasUnitSlices) {
  const Grid1D g(5, -1.0, 1.0);
  const ProblemInstance pb =
      parametric_convection_diffusion_problem(g, ParamSet::log_spaced(4, 1.0, 10.0));
  EXPECT_EQ(pb.rhs.mode(0), 4);
  for (Index l = 1; l <= 4; ++l)
    EXPECT_NEAR(tt_norm(tt_slice_first_mode(pb.rhs, l)), 1.0, 1e-13);
}

TEST(Operators, HeatPartsAndBoundaryPolicy) {
  EXPECT_THROW(heat_parametrized_parts(Grid1D(15, -1.0, 1.0)), std::invalid_argument);
  EXPECT_NO_THROW(heat_parametrized_parts(Grid1D(15, -1.0, 1.0), IndicatorBoundary::Closed));

  const Grid1D g(4, -1.0, 1.0);
  const HeatParts parts = heat_parametrized_parts(g);
  Vector ind(4);
  for (Index i = 0; i < 4; ++i) ind(i) = std::abs(g.node(i + 1)) < 0.5 ? 1.0 : 0.0;
  const Matrix di = ind.asDiagonal();
  const Matrix lap = laplacian_1d(g);
  const Matrix id = Matrix::Identity(4, 4);
  const Matrix d3 = kron3(di, di, di);
  const Matrix lap3 = kron3(lap, id, id) + kron3(id, lap, id) + kron3(id, id, lap);
  EXPECT_LT(rel_err(oracle_dense(parts.b1), -d3 * lap3), 1e-14);
  EXPECT_LT(rel_err(oracle_dense(parts.b0), -lap3), 1e-14);
  EXPECT_NEAR(tt_norm(parts.c), std::sqrt(64.0) / std::pow(4.0, 1.5), 1e-14);

  const ProblemInstance pb = heat_problem(g, ParamSet::uniform(3, 0.0, 10.0));
  for (Index l = 1; l <= 3; ++l)
    EXPECT_LT(rel_err(oracle_dense(tt_slice_first_mode(pb.rhs, l)), oracle_dense(parts.c)),
              1e-15);
}

TEST(Operators, MultiRhsSlicesAreNormalizedAndBounded) {
  const Grid1D g(5, -1.0, 1.0);
  const ProblemInstance base = convection_diffusion_problem(g);
  const ProblemInstance pb = multi_rhs_problem(base, 6, 3, 17);
  EXPECT_EQ(pb.rhs.mode(0), 6);
  EXPECT_LE(pb.rhs.max_rank(), 4);
  for (Index l = 1; l <= 6; ++l)
    EXPECT_NEAR(tt_norm(tt_slice_first_mode(pb.rhs, l)), 1.0, 1e-13);
  const Vector s1 = oracle_dense(tt_slice_first_mode(pb.rhs, 1));
  const Vector s2 = oracle_dense(tt_slice_first_mode(pb.rhs, 2));
  EXPECT_GT((s1 - s2).norm(), 1e-3);
  const Matrix want =
      Eigen::kroneckerProduct(Matrix::Identity(6, 6), oracle_dense(base.op)).eval();
  EXPECT_LT(rel_err(oracle_dense(pb.op), want), 1e-15);
  const ProblemInstance again = multi_rhs_problem(base, 6, 3, 17);
  EXPECT_EQ(oracle_dense(again.rhs), oracle_dense(pb.rhs));
}

TEST(Operators, LaplacianEigenpairs) {
  const Grid1D g(6, 0.0, 1.0);
  const Matrix lap = -laplacian_1d(g);
  for (Index j = 1; j <= 6; ++j) {
    const Vector v = laplacian_eigvec(6, j);
    EXPECT_NEAR(v.norm(), 1.0, 1e-14);
    EXPECT_LT((lap * v - neg_laplacian_eigenvalue(g, {j}) * v).norm(), 1e-10);
  }
  EXPECT_THROW(laplacian_eigvec(6, 7), IndexError);

  const Matrix a = oracle_dense(tt_neg_laplacian(3, g));
  const std::vector<std::array<Index, 3>> one{{2, 1, 3}};
  const Vector e = oracle_dense(laplacian_eigen_rhs(g, one));
  EXPECT_LT((a * e - neg_laplacian_eigenvalue(g, {2, 1, 3}) * e).norm(), 1e-9);
}

TEST(Operators, DistinctEigenTriplesAreSortedAndDistinct) {
  const Grid1D g(9, 0.0, 1.0);
  const auto t = distinct_eigen_triples(g, 10);
  ASSERT_EQ(t.size(), 10u);
  EXPECT_EQ(t[0], (std::array<Index, 3>{1, 1, 1}));
  double last = 0.0;
  for (const auto& tr : t) {
    const double lam = neg_laplacian_eigenvalue(g, {tr[0], tr[1], tr[2]});
    EXPECT_GT(lam, last * (1 + 1e-9));
    last = lam;
  }
}
