#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ttkrylov/tt.hpp"

namespace ttk {

/// Uniform grid of n interior nodes on [a, b]; node i (1-based) sits at a + i*h.
struct Grid1D {
  Index n = 0;
  double a = 0.0;
  double b = 1.0;

  Grid1D(Index n_, double a_, double b_);
  double h() const { return (b - a) / static_cast<double>(n + 1); }
  double node(Index i) const { return a + static_cast<double>(i) * h(); }
  Vector nodes() const;
};

enum class ParamDistribution { Log, Uniform };

struct ParamSet {
  std::vector<double> values;
  ParamDistribution distribution = ParamDistribution::Log;
  double lo = 1.0;
  double hi = 10.0;

  Index size() const { return static_cast<Index>(values.size()); }
  /// p values 10^(log10 lo + t (log10 hi - log10 lo)), t equispaced in [0, 1].
  static ParamSet log_spaced(Index p, double lo, double hi);
  /// p equispaced values in [lo, hi].
  static ParamSet uniform(Index p, double lo, double hi);
};

struct ProblemInstance {
  TTOperator op;
  TTVector rhs;
  std::optional<TTOperator> preconditioner;
  std::optional<TTVector> analytic_solution;
  std::string label;
};

Matrix laplacian_1d(const Grid1D& g);
Matrix gradient_1d(const Grid1D& g);

/// Σ_k L_1⊗…⊗L_{k-1}⊗M_k⊗R_{k+1}⊗…⊗R_d with interior ranks exactly 2.
TTOperator laplace_like(const std::vector<Matrix>& l, const std::vector<Matrix>& m,
                        const std::vector<Matrix>& r);

TTOperator tt_laplacian(Index d, const Grid1D& g);
TTOperator tt_neg_laplacian(Index d, const Grid1D& g);

/// −Δ_d u = f on [0,1]^d with u = Π (1 − x_k²).
ProblemInstance poisson_problem(const Grid1D& g, Index d = 3);

/// Convection term diag(1−x²)∇⊗diag(2y)⊗I + diag(−2x)⊗diag(1−y²)∇⊗I on [−1,1]³.
TTOperator convection_operator(const Grid1D& g);
/// Lifting of u = 1 on the face y = 1 for −αΔ + convection: α/h² + x(1−y_n²)/h on the
/// nodes next to that face.
TTVector convection_diffusion_rhs(const Grid1D& g, double alpha = 1.0);
ProblemInstance convection_diffusion_problem(const Grid1D& g);

enum class IndicatorBoundary {
  Reject,  ///< a node exactly on ±0.5 is an error
  Closed,  ///< nodes on ±0.5 belong to the inclusion
};

struct HeatParts {
  TTOperator b0;
  TTOperator b1;
  TTVector c;
};

HeatParts heat_parametrized_parts(const Grid1D& g,
                                  IndicatorBoundary boundary = IndicatorBoundary::Reject);

/// Σ_{k=−q}^{q} c_k exp(t_k Δ₁)^{⊗d}, with ξ = π/√q, t_k = e^{kξ}, c_k = ξ t_k, rounded at tau.
TTOperator inv_laplacian_preconditioner(Index d, const Grid1D& g, Index q, double tau);
Index default_addends(Index n);

TTOperator all_in_one_operator(const TTOperator& b0, const TTOperator& b1, const ParamSet& params);
/// I_p ⊗ c.
TTOperator identity_tensorized(Index p, const TTOperator& c);
TTVector all_in_one_rhs(const std::vector<TTVector>& parts);

ProblemInstance parametric_convection_diffusion_problem(const Grid1D& g, const ParamSet& params);
ProblemInstance heat_problem(const Grid1D& g, const ParamSet& params,
                             IndicatorBoundary boundary = IndicatorBoundary::Reject);
ProblemInstance multi_rhs_problem(const ProblemInstance& base, Index p, Index rank_cap,
                                  std::uint64_t seed);

/// sin(jπk/(n+1)), k = 1..n, normalized; j is 1-based.
Vector laplacian_eigvec(Index n, Index j);
double neg_laplacian_eigenvalue(const Grid1D& g, const std::vector<Index>& indices);
TTVector laplacian_eigen_rhs(const Grid1D& g, const std::vector<std::array<Index, 3>>& indices);
/// Index triples of the first `count` distinct eigenvalues of −Δ₃, ascending.
std::vector<std::array<Index, 3>> distinct_eigen_triples(const Grid1D& g, Index count);

}  // namespace ttk
