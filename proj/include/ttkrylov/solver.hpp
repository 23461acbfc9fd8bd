#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ttkrylov/tt.hpp"

namespace ttk {

enum class RoundingPolicy { Constant, Relaxed };
enum class StoppingCriterion { EtaAb, EtaB, EtaTildeB };

struct GmresConfig {
  Index m = 50;
  double epsilon = 1e-5;
  double delta = 1e-5;
  Index maxit = 50;
  RoundingPolicy rounding_policy = RoundingPolicy::Constant;
  StoppingCriterion stopping_criterion = StoppingCriterion::EtaAb;
  Index norm_samples = 10;
  /// TT-rank of the random probes used for ‖A‖₂ estimates.
  Index sample_rank = 5;
  std::uint64_t seed = 0;
  /// Iterate assembly period; rows in between carry NaN residual fields.
  Index assemble_every = 1;
  /// Keep the (inner-system) iterate of every assembled iteration in the outcome.
  bool keep_iterates = false;

  void validate() const;
};

struct IterationRecord {
  Index iter = 0;
  Index cycle = 0;
  double eta_b = 0;       ///< ‖r‖ / ‖b‖ for the original right-hand side
  double eta_Ab = 0;      ///< ‖r‖ / (‖A‖‖x‖ + ‖b‖) on the unpreconditioned iterate
  double eta_AMb = 0;     ///< backward error of the inner (preconditioned) system on t
  double eta_tilde_b = 0; ///< least-squares residual over ‖cycle rhs‖
  double lsq_residual = 0;
  double true_residual = 0;
  Index max_rank_v = 0;
  Index max_rank_x = 0;
  double cr_last_vec = 0;
  double cr_basis = 0;
  double delta_used = 0;
};

struct GmresOutcome {
  TTVector solution;
  bool converged = false;
  Index iterations = 0;
  std::vector<IterationRecord> trace;
  /// Norm estimate used in the inner backward error (‖A‖₂, or ‖AM‖₂ when preconditioned).
  double estimated_opnorm = 0;
  /// ‖A‖₂ estimate of the unpreconditioned operator.
  double estimated_opnorm_A = 0;
  bool breakdown = false;
  bool stagnated = false;
  /// Inner iterates t_k of assembled iterations when keep_iterates is set.
  std::vector<std::pair<Index, TTVector>> iterates;
};

/// Incremental least-squares solver for βe₁ − H̄y via plane rotations.
class HessenbergLsq {
 public:
  explicit HessenbergLsq(double beta);
  /// Appends column k (length k+1, the last entry being the subdiagonal).
  void add_column(const Vector& h);
  Index size() const { return static_cast<Index>(cs_.size()); }
  double residual() const;
  Vector solve() const;

 private:
  std::vector<double> cs_, sn_;
  std::vector<Vector> r_cols_;
  std::vector<double> g_;
};

std::pair<Vector, double> hessenberg_lsq(const Matrix& hbar, double beta);

/// max ‖A w‖ over unit random TT vectors w.
double estimate_l2_norm(const TTOperator& a, Index samples, std::uint64_t seed,
                        Index sample_rank = 5);
/// Same estimate for the composition A∘M, applied without forming it.
double estimate_l2_norm(const TTOperator& a, const TTOperator& m, Index samples,
                        std::uint64_t seed, Index sample_rank = 5);

/// A·(M·x) with M·x compressed losslessly before the second product.
TTVector apply_composed(const TTOperator& a, const TTOperator& m, const TTVector& x);

GmresOutcome tt_gmres(const TTOperator& a, const TTVector& b, const GmresConfig& cfg);
GmresOutcome relaxed_tt_gmres(const TTOperator& a, const TTVector& b, const GmresConfig& cfg);
GmresOutcome tt_right_gmres(const TTOperator& a, const TTOperator& m, const TTVector& b,
                            const TTVector& x0, const GmresConfig& cfg);
/// Restarted GMRES without a preconditioner.
GmresOutcome tt_restarted_gmres(const TTOperator& a, const TTVector& b, const TTVector& x0,
                                const GmresConfig& cfg);

}  // namespace ttk
