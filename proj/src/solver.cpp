#include "ttkrylov/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ttk {

void GmresConfig::validate() const {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (delta < 0) throw std::invalid_argument("delta must be non-negative");
  if (m < 1) throw std::invalid_argument("restart length m must be >= 1");
  if (maxit < m) throw std::invalid_argument("maxit must be >= m");
  if (norm_samples < 1) throw std::invalid_argument("norm_samples must be >= 1");
  if (sample_rank < 1) throw std::invalid_argument("sample_rank must be >= 1");
  if (assemble_every < 1) throw std::invalid_argument("assemble_every must be >= 1");
}

HessenbergLsq::HessenbergLsq(double beta) : g_{beta} {}

void HessenbergLsq::add_column(const Vector& h_in) {
  const Index k = size() + 1;
  if (h_in.size() != k + 1) throw std::invalid_argument("Hessenberg column has wrong length");
  Vector h = h_in;
  for (Index i = 0; i + 1 < k; ++i) {
    const double t = cs_[i] * h(i) + sn_[i] * h(i + 1);
    h(i + 1) = -sn_[i] * h(i) + cs_[i] * h(i + 1);
    h(i) = t;
  }
  const double r = std::hypot(h(k - 1), h(k));
  const double c = r == 0.0 ? 1.0 : h(k - 1) / r;
  const double s = r == 0.0 ? 0.0 : h(k) / r;
  h(k - 1) = r;
  cs_.push_back(c);
  sn_.push_back(s);
  r_cols_.push_back(h.head(k));
  g_.push_back(-s * g_[k - 1]);
  g_[k - 1] = c * g_[k - 1];
}

double HessenbergLsq::residual() const { return std::abs(g_.back()); }

Vector HessenbergLsq::solve() const {
  const Index k = size();
  Vector y(k);
  for (Index i = k - 1; i >= 0; --i) {
    double s = g_[i];
    for (Index j = i + 1; j < k; ++j) s -= r_cols_[j](i) * y(j);
    const double diag = r_cols_[i](i);
    if (diag == 0.0) throw std::domain_error("singular triangular factor in Hessenberg solve");
    y(i) = s / diag;
  }
  return y;
}

std::pair<Vector, double> hessenberg_lsq(const Matrix& hbar, double beta) {
  const Index k = hbar.cols();
  if (hbar.rows() != k + 1) throw std::invalid_argument("H̄ must be (k+1) x k");
  for (Index j = 0; j < k; ++j)
    for (Index i = j + 2; i <= k; ++i)
      if (hbar(i, j) != 0.0) throw std::invalid_argument("H̄ is not upper Hessenberg");
  HessenbergLsq lsq(beta);
  for (Index j = 0; j < k; ++j) lsq.add_column(hbar.col(j).head(j + 2));
  return {lsq.solve(), lsq.residual()};
}

namespace {

std::vector<Index> probe_ranks(const std::vector<Index>& modes, Index cap) {
  const Index d = static_cast<Index>(modes.size());
  std::vector<Index> r(d + 1, 1);
  for (Index k = 1; k < d; ++k) {
    double left = 1, right = 1;
    for (Index j = 0; j < k; ++j) left *= static_cast<double>(modes[j]);
    for (Index j = k; j < d; ++j) right *= static_cast<double>(modes[j]);
    r[k] = static_cast<Index>(std::min<double>({static_cast<double>(cap), left, right}));
  }
  return r;
}

std::uint64_t probe_seed(std::uint64_t seed, Index i) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(i) + 1;
}

TTVector compress(const TTVector& x) { return tt_round(x, 0.0); }

double residual_norm(const TTVector& image, const TTVector& rhs) {
  const TTVector terms[] = {image, rhs};
  const double coeffs[] = {1.0, -1.0};
  return tt_norm_sum(terms, coeffs);
}

struct SystemMap {
  const TTOperator* a;
  const TTOperator* m;

  TTVector apply(const TTVector& v, double delta) const {
    if (m == nullptr) return tt_round(tt_apply(*a, v), delta);
    return tt_round(tt_apply(*a, tt_round(tt_apply(*m, v), delta)), delta);
  }
  TTVector apply_exact(const TTVector& v) const {
    return m == nullptr ? tt_apply(*a, v) : apply_composed(*a, *m, v);
  }
  TTVector precondition(const TTVector& t) const {
    return m == nullptr ? t : compress(tt_apply(*m, t));
  }
};

struct CycleContext {
  SystemMap map;
  const TTVector* rhs;       // cycle right-hand side
  double norm_b;             // original right-hand side norm
  double opnorm_sys;
  double opnorm_a;
  const TTVector* x0;        // outer iterate (nullptr if zero)
  const TTVector* b;         // original right-hand side
  const TTVector* ax0;       // A x0, unrounded
  Index iter_offset;
  Index cycle;
  Index max_steps;
};

struct CycleResult {
  TTVector t;
  bool converged = false;
  bool breakdown = false;
  Index steps = 0;
};

double criterion_value(const IterationRecord& rec, StoppingCriterion c) {
  switch (c) {
    case StoppingCriterion::EtaAb: return rec.eta_AMb;
    case StoppingCriterion::EtaB: return rec.eta_b;
    case StoppingCriterion::EtaTildeB: return rec.eta_tilde_b;
  }
  return rec.eta_AMb;
}

CycleResult run_cycle(const CycleContext& ctx, const GmresConfig& cfg, GmresOutcome& out) {
  const TTVector& b = *ctx.rhs;
  const double beta = tt_norm(b);
  CycleResult res{tt_zeros(b.modes())};
  if (beta == 0.0) {
    res.converged = true;
    return res;
  }
  const bool relaxed = cfg.rounding_policy == RoundingPolicy::Relaxed;
  const StoppingCriterion crit = relaxed ? StoppingCriterion::EtaTildeB : cfg.stopping_criterion;
  const double dense = static_cast<double>(storage_stats(b).dense_entries);
  constexpr double kFloor = std::numeric_limits<double>::epsilon();

  std::vector<TTVector> basis{tt_scale(b, 1.0 / beta)};
  std::vector<std::vector<double>> gram{{tt_inner(basis[0], basis[0])}};
  double basis_entries = static_cast<double>(storage_stats(basis[0]).tt_entries);
  HessenbergLsq lsq(beta);
  double eta_tilde_prev = 1.0;

  for (Index k = 1; k <= ctx.max_steps; ++k) {
    const double delta_k =
        relaxed ? std::min(1.0, cfg.delta / std::max(eta_tilde_prev, kFloor)) : cfg.delta;
    TTVector w = ctx.map.apply(basis[k - 1], delta_k);

    // Modified Gram-Schmidt; ⟨v_i, w − Σ_{j<i} h_j v_j⟩ is evaluated by bilinearity
    // so the intermediate sums are never materialized.
    Vector h(k + 1);
    for (Index i = 0; i < k; ++i) {
      double hi = tt_inner(basis[i], w);
      for (Index j = 0; j < i; ++j) hi -= h(j) * gram[i][j];
      h(i) = hi;
    }
    std::vector<TTVector> terms{w};
    std::vector<double> coeffs{1.0};
    for (Index i = 0; i < k; ++i) {
      terms.push_back(basis[i]);
      coeffs.push_back(-h(i));
    }
    TTVector wr = tt_round_sum(terms, coeffs, delta_k);
    const double hnext = tt_norm(wr);
    h(k) = hnext;
    lsq.add_column(h);
    const bool breakdown = hnext < 1e-14 * beta;

    if (!breakdown) {
      basis.push_back(tt_scale(wr, 1.0 / hnext));
      std::vector<double> row;
      for (Index j = 0; j < k; ++j) row.push_back(tt_inner(basis[k], basis[j]));
      row.push_back(tt_inner(basis[k], basis[k]));
      gram.push_back(std::move(row));
      basis_entries += static_cast<double>(storage_stats(basis[k]).tt_entries);
    }

    IterationRecord rec;
    rec.iter = ctx.iter_offset + k;
    rec.cycle = ctx.cycle;
    rec.lsq_residual = lsq.residual();
    rec.eta_tilde_b = rec.lsq_residual / beta;
    rec.delta_used = delta_k;
    const TTVector& vlast = basis.back();
    rec.max_rank_v = vlast.max_rank();
    rec.cr_last_vec = storage_stats(vlast).compression_ratio;
    rec.cr_basis = basis_entries / (static_cast<double>(basis.size()) * dense);

    const bool last = breakdown || k == ctx.max_steps;
    const bool tilde_hit = crit == StoppingCriterion::EtaTildeB && rec.eta_tilde_b < cfg.epsilon;
    const bool assemble = last || tilde_hit || k % cfg.assemble_every == 0;
    bool stop = breakdown;
    if (assemble) {
      Vector y = lsq.solve();
      std::vector<TTVector> vs(basis.begin(), basis.begin() + k);
      std::vector<double> ys(y.data(), y.data() + k);
      res.t = tt_round_sum(vs, ys, delta_k);

      TTVector image = ctx.map.apply_exact(res.t);
      const double inner = residual_norm(image, b);
      rec.true_residual = inner;
      if (ctx.x0 != nullptr) {
        const TTVector parts[] = {*ctx.b, *ctx.ax0, image};
        const double signs[] = {1.0, -1.0, -1.0};
        rec.true_residual = tt_norm_sum(parts, signs);
      }
      rec.max_rank_x = res.t.max_rank();
      const double tnorm = tt_norm(res.t);
      rec.eta_b = rec.true_residual / ctx.norm_b;
      rec.eta_AMb = inner / (ctx.opnorm_sys * tnorm + beta);
      double xnorm = tnorm;
      if (ctx.map.m != nullptr || ctx.x0 != nullptr) {
        TTVector mt = ctx.map.precondition(res.t);
        if (ctx.x0 != nullptr) {
          const TTVector xs[] = {*ctx.x0, mt};
          const double cs[] = {1.0, 1.0};
          xnorm = tt_norm_sum(xs, cs);
        } else {
          xnorm = tt_norm(mt);
        }
      }
      rec.eta_Ab = rec.true_residual / (ctx.opnorm_a * xnorm + ctx.norm_b);
      if (cfg.keep_iterates) out.iterates.emplace_back(rec.iter, res.t);
      double value = criterion_value(rec, crit);
      if (ctx.x0 != nullptr && crit == StoppingCriterion::EtaAb) value = std::min(value, rec.eta_Ab);
      if (value < cfg.epsilon) {
        res.converged = true;
        stop = true;
      }
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      rec.true_residual = rec.eta_b = rec.eta_Ab = rec.eta_AMb = nan;
      rec.max_rank_x = 0;
    }
    out.trace.push_back(rec);
    eta_tilde_prev = rec.eta_tilde_b;
    res.steps = k;
    if (breakdown) res.breakdown = true;
    if (stop) break;
  }
  return res;
}

GmresOutcome gmres_driver(const TTOperator& a, const TTOperator* m, const TTVector& b,
                          const TTVector* x0_in, const GmresConfig& cfg, bool restart) {
  cfg.validate();
  if (a.row_modes() != a.col_modes() || a.col_modes() != b.modes())
    throw ShapeError("operator and right-hand side shapes are inconsistent");
  if (m != nullptr && (m->row_modes() != a.col_modes() || m->col_modes() != a.col_modes()))
    throw ShapeError("preconditioner is not composable with the operator");

  GmresOutcome out{tt_zeros(b.modes()), false, 0, {}, 0.0, 0.0, false, false, {}};
  out.estimated_opnorm_A = estimate_l2_norm(a, cfg.norm_samples, cfg.seed, cfg.sample_rank);
  out.estimated_opnorm =
      m == nullptr ? out.estimated_opnorm_A
                   : estimate_l2_norm(a, *m, cfg.norm_samples, cfg.seed, cfg.sample_rank);
  const double norm_b = tt_norm(b);
  if (norm_b == 0.0) throw std::invalid_argument("right-hand side has zero norm");

  std::optional<TTVector> x;
  if (x0_in != nullptr && tt_norm(*x0_in) > 0.0) x = *x0_in;
  const SystemMap map{&a, m};
  double prev_outer = std::numeric_limits<double>::infinity();
  Index total = 0;
  Index cycle = 0;
  while (total < cfg.maxit) {
    TTVector r = b;
    std::optional<TTVector> ax;
    if (x) {
      ax = tt_apply(a, *x);
      const TTVector terms[] = {b, *ax};
      const double coeffs[] = {1.0, -1.0};
      r = tt_round_sum(terms, coeffs, cfg.delta);
    }
    const double outer = tt_norm(r);
    if (cycle > 0 && outer >= prev_outer * (1.0 - 1e-14)) {
      out.stagnated = true;
      break;
    }
    prev_outer = outer;
    ++cycle;
    const Index steps = restart ? std::min(cfg.m, cfg.maxit - total) : std::min(cfg.m, cfg.maxit);
    CycleContext ctx{map,   &r,    norm_b, out.estimated_opnorm, out.estimated_opnorm_A,
                     x ? &*x : nullptr, &b, ax ? &*ax : nullptr, total, cycle, steps};
    CycleResult cr = run_cycle(ctx, cfg, out);
    total += cr.steps;
    out.breakdown = out.breakdown || cr.breakdown;

    TTVector update = map.precondition(cr.t);
    if (x) {
      const TTVector terms[] = {*x, update};
      const double coeffs[] = {1.0, 1.0};
      x = tt_round_sum(terms, coeffs, cfg.delta);
    } else {
      x = m == nullptr ? cr.t : tt_round(update, cfg.delta);
    }
    if (cr.converged) {
      out.converged = true;
      break;
    }
    if (!restart || cr.steps == 0) break;
  }
  out.iterations = static_cast<Index>(out.trace.size());
  if (x) out.solution = *x;
  return out;
}

}  // namespace

TTVector apply_composed(const TTOperator& a, const TTOperator& m, const TTVector& x) {
  return tt_apply(a, compress(tt_apply(m, x)));
}

double estimate_l2_norm(const TTOperator& a, Index samples, std::uint64_t seed, Index sample_rank) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const auto modes = a.col_modes();
  const auto ranks = probe_ranks(modes, sample_rank);
  double best = 0.0;
  for (Index i = 0; i < samples; ++i)
    best = std::max(best, tt_norm(tt_apply(a, tt_random(modes, ranks, probe_seed(seed, i)))));
  return best;
}

double estimate_l2_norm(const TTOperator& a, const TTOperator& m, Index samples,
                        std::uint64_t seed, Index sample_rank) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const auto modes = m.col_modes();
  const auto ranks = probe_ranks(modes, sample_rank);
  double best = 0.0;
  for (Index i = 0; i < samples; ++i)
    best = std::max(best,
                    tt_norm(apply_composed(a, m, tt_random(modes, ranks, probe_seed(seed, i)))));
  return best;
}

GmresOutcome tt_gmres(const TTOperator& a, const TTVector& b, const GmresConfig& cfg) {
  return gmres_driver(a, nullptr, b, nullptr, cfg, false);
}

GmresOutcome relaxed_tt_gmres(const TTOperator& a, const TTVector& b, const GmresConfig& cfg) {
  GmresConfig c = cfg;
  c.rounding_policy = RoundingPolicy::Relaxed;
  c.stopping_criterion = StoppingCriterion::EtaTildeB;
  return gmres_driver(a, nullptr, b, nullptr, c, false);
}

GmresOutcome tt_right_gmres(const TTOperator& a, const TTOperator& m, const TTVector& b,
                            const TTVector& x0, const GmresConfig& cfg) {
  return gmres_driver(a, &m, b, &x0, cfg, true);
}

GmresOutcome tt_restarted_gmres(const TTOperator& a, const TTVector& b, const TTVector& x0,
                                const GmresConfig& cfg) {
  return gmres_driver(a, nullptr, b, &x0, cfg, true);
}

}  // namespace ttk
