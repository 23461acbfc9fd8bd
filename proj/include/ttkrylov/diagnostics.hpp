#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ttkrylov/solver.hpp"
#include "ttkrylov/tt.hpp"

namespace ttk {

struct BackwardErrors {
  double eta_b = 0;
  double eta_Ab = 0;
  double eta_tilde_b = 0;
  double residual_norm = 0;
  double lsq_residual_norm = 0;
};

/// Errors of x for A x = b, or of the preconditioned iterate t for A M t = b when m is given.
BackwardErrors backward_errors(const TTOperator& a, const TTOperator* m, const TTVector& x,
                               const TTVector& b, double opnorm);
BackwardErrors backward_errors(const TTOperator& a, const TTVector& x, const TTVector& b,
                               double opnorm);

struct BoundParams {
  Index p = 1;
  /// Stabilization bound; computed from the iterates when absent.
  std::optional<double> nu;
  double opnorm_A = 1;
  double opnorm_A0 = 1;
  std::optional<double> opnorm_Ainv;
  std::optional<double> kappa2;

  void validate() const;
};

/// An all-in-one system A M t = b whose first mode indexes p decoupled systems.
struct AllInOneSystem {
  TTOperator a;
  std::optional<TTOperator> m;
  TTVector b;

  Index p() const { return b.mode(0); }
};

/// Per-slice view of one iterate.
struct SlicePoint {
  double residual_norm = 0;   ///< ‖A_ℓ x^[ℓ] − b_ℓ‖
  double image_norm = 0;      ///< ‖A_ℓ x^[ℓ]‖
  double x_norm = 0;          ///< ‖x^[ℓ]‖
  double rhs_norm = 0;        ///< ‖b_ℓ‖
};

std::vector<SlicePoint> slice_points(const AllInOneSystem& sys, const TTVector& x);

/// Per-slice backward errors with slice operator norms estimated once each.
std::vector<BackwardErrors> slice_backward_errors(const AllInOneSystem& sys, const TTVector& x,
                                                  const BoundParams& params,
                                                  const GmresConfig& sampling = {});

/// ‖A_ℓ‖₂ (or ‖A_ℓ M_ℓ‖₂) estimates for every slice.
std::vector<double> slice_opnorms(const AllInOneSystem& sys, const GmresConfig& sampling = {});

struct BoundFactors {
  std::vector<double> rho;
  std::vector<double> psi;
  std::optional<double> rho_star;
  std::optional<double> rho_dagger;
};

BoundFactors bound_factors(double x_norm, const std::vector<SlicePoint>& slices,
                           const BoundParams& params);

struct BoundRow {
  Index iter = 0;
  Index ell = 0;  ///< 1-based
  double eta_b = 0;
  double eta_Ab = 0;
  double eta_b_slice = 0;
  double eta_Ab_slice = 0;
  double rho_ell = 0;
  double rho_star = 0;    ///< NaN before k* or when unavailable
  double psi_ell = 0;
  double rho_dagger = 0;  ///< NaN unless κ₂ is supplied
};

struct BoundViolation {
  Index iter = 0;
  Index ell = 0;
  std::string bound;
  double lhs = 0;
  double rhs = 0;
};

struct BoundOptions {
  /// Multiple right-hand sides with a shared operator: enables the ψ_ℓ check.
  bool same_operator = false;
  double slack = 1e-12;
  Index window = 3;
  double window_variation = 0.1;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  std::vector<std::vector<double>> upsilon;  ///< υ_ℓ(k) = ρ_ℓ(x_k), indexed [ℓ][k]
  std::vector<std::vector<double>> gamma;    ///< γ_ℓ(k) = ψ_ℓ(x_k)
  Index ell_min_upsilon = 0, ell_max_upsilon = 0;
  Index ell_min_gamma = 0, ell_max_gamma = 0;
  std::optional<Index> k_star;
  std::optional<double> nu;
  double opnorm_A = 0;
  std::vector<double> slice_opnorm;
  /// max_k |‖r‖² − Σ_ℓ ‖r_ℓ‖²| / ‖r‖² for the rounded residual tensor r
  double norm_identity_error = 0;
  std::vector<BoundViolation> violations;
};

/// Evaluates every bound at every stored iterate of a solve of `sys`.
BoundReport verify_bounds(const AllInOneSystem& sys,
                          const std::vector<std::pair<Index, TTVector>>& iterates,
                          const BoundParams& params, const std::vector<double>& slice_norm_estimates,
                          const BoundOptions& options = {});

/// Position of the first window over which every series varies by less than `variation`.
std::optional<Index> detect_stabilization(const std::vector<std::vector<double>>& series,
                                          Index window, double variation);

}  // namespace ttk
