#include "ttkrylov/cli/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ttkrylov/cli/emit.hpp"
#include "ttkrylov/diagnostics.hpp"
#include "ttkrylov/operators.hpp"
#include "ttkrylov/solver.hpp"
#include "ttkrylov/version.hpp"

namespace ttk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Run {
 public:
  Run(const ExperimentConfig& cfg, const fs::path& dir, RunManifest& man)
      : cfg_(cfg), dir_(dir), man_(man) {}

  template <class F>
  auto timed(const std::string& phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      man_.phases.push_back({phase, dt.count()});
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto out = f();
      finish();
      return out;
    }
  }

  fs::path prefix(const std::string& suffix = "") const {
    return dir_ / (cfg_.output + suffix);
  }

  void emit(const GmresOutcome& out, const BoundReport* report, const std::string& suffix = "") {
    for (const auto& f : emit_trace(out, report, prefix(suffix), cfg_.format))
      man_.files.push_back(f.string());
  }

  void write(const std::string& suffix, const std::string& text) {
    const fs::path p = prefix(suffix);
    write_text(p, text);
    man_.files.push_back(p.string());
  }

  const ExperimentConfig& cfg() const { return cfg_; }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
  RunManifest& man_;
};

GmresConfig solver_config(const ExperimentConfig& c) {
  GmresConfig g;
  g.m = c.m;
  g.epsilon = c.epsilon;
  g.delta = c.delta;
  g.maxit = c.maxit;
  g.rounding_policy = c.policy == "relaxed" ? RoundingPolicy::Relaxed : RoundingPolicy::Constant;
  g.stopping_criterion = c.criterion == "eta_b"         ? StoppingCriterion::EtaB
                         : c.criterion == "eta_tilde_b" ? StoppingCriterion::EtaTildeB
                                                        : StoppingCriterion::EtaAb;
  g.norm_samples = c.norm_samples;
  g.sample_rank = c.sample_rank;
  g.seed = c.seed;
  g.assemble_every = c.assemble_every;
  return g;
}

Index addends(const ExperimentConfig& c) { return c.q > 0 ? c.q : default_addends(c.n); }

/// Right-preconditioned when M is given, plain restarted GMRES otherwise.
GmresOutcome solve(const TTOperator& a, const std::optional<TTOperator>& m, const TTVector& b,
                   const GmresConfig& g) {
  const TTVector x0 = tt_zeros(b.modes());
  return m ? tt_right_gmres(a, *m, b, x0, g) : tt_restarted_gmres(a, b, x0, g);
}

json outcome_summary(const GmresOutcome& out) {
  json j{{"converged", out.converged},
         {"iterations", out.iterations},
         {"breakdown", out.breakdown},
         {"stagnated", out.stagnated},
         {"opnorm_estimate", num(out.estimated_opnorm)},
         {"opnorm_A_estimate", num(out.estimated_opnorm_A)},
         {"solution_max_rank", out.solution.max_rank()}};
  if (!out.trace.empty()) {
    const IterationRecord& last = out.trace.back();
    j["final_eta_b"] = num(last.eta_b);
    j["final_eta_Ab"] = num(last.eta_Ab);
    j["final_eta_AMb"] = num(last.eta_AMb);
    j["final_eta_tilde_b"] = num(last.eta_tilde_b);
    j["final_cr_basis"] = num(last.cr_basis);
  }
  return j;
}

bool run_single(Run& run, RunManifest& man) {
  const ExperimentConfig& c = run.cfg();
  const bool poisson = c.experiment == Experiment::Poisson;
  const Grid1D g = poisson ? Grid1D(c.n, 0.0, 1.0) : Grid1D(c.n, -1.0, 1.0);
  ProblemInstance pb = run.timed("build", [&] {
    return poisson ? poisson_problem(g, c.d) : convection_diffusion_problem(g);
  });
  std::optional<TTOperator> m;
  if (c.precondition)
    m = run.timed("preconditioner",
                  [&] { return inv_laplacian_preconditioner(c.d, g, addends(c), c.tau); });
  const GmresOutcome out = run.timed("solve", [&] { return solve(pb.op, m, pb.rhs, solver_config(c)); });
  json summary = outcome_summary(out);
  if (m) summary["preconditioner_max_rank"] = m->max_rank();
  if (pb.analytic_solution) {
    const TTVector x = out.solution;
    const TTVector terms[] = {x, *pb.analytic_solution};
    const double coeffs[] = {1.0, -1.0};
    summary["relative_error_vs_analytic"] =
        num(tt_norm_sum(terms, coeffs) / tt_norm(*pb.analytic_solution));
  }
  run.timed("emit", [&] {
    run.emit(out, nullptr);
    run.write(".summary.json", summary.dump(1) + "\n");
  });
  man.converged = out.converged;
  return out.converged;
}

bool run_parametric(Run& run, RunManifest& man) {
  const ExperimentConfig& c = run.cfg();
  const bool on_unit_cube = c.experiment == Experiment::MultiRhsPoisson;
  const Grid1D g = on_unit_cube ? Grid1D(c.n, 0.0, 1.0) : Grid1D(c.n, -1.0, 1.0);
  const bool defaults = c.param_lo == 0.0 && c.param_hi == 0.0;
  const bool same_operator =
      c.experiment == Experiment::MultiRhsPoisson || c.experiment == Experiment::MultiRhsConvdiff;

  std::optional<TTOperator> base_m;
  if (c.precondition)
    base_m = run.timed("preconditioner",
                       [&] { return inv_laplacian_preconditioner(3, g, addends(c), c.tau); });
  ProblemInstance pb = run.timed("build", [&] {
    switch (c.experiment) {
      case Experiment::ParamConvdiff:
        return parametric_convection_diffusion_problem(
            g, ParamSet::log_spaced(c.p, defaults ? 1.0 : c.param_lo, defaults ? 10.0 : c.param_hi));
      case Experiment::HeatParam:
        return heat_problem(g, ParamSet::uniform(c.p, defaults ? 0.0 : c.param_lo,
                                                 defaults ? 10.0 : c.param_hi),
                            c.boundary == "closed" ? IndicatorBoundary::Closed
                                                   : IndicatorBoundary::Reject);
      case Experiment::MultiRhsPoisson:
        return multi_rhs_problem(poisson_problem(g, 3), c.p, c.rank_cap, c.seed);
      default:
        return multi_rhs_problem(convection_diffusion_problem(g), c.p, c.rank_cap, c.seed);
    }
  });
  std::optional<TTOperator> m;
  if (base_m) m = identity_tensorized(c.p, *base_m);

  GmresConfig gc = solver_config(c);
  gc.keep_iterates = c.bounds;
  const GmresOutcome out = run.timed("solve", [&] { return solve(pb.op, m, pb.rhs, gc); });
  json summary = outcome_summary(out);

  std::optional<BoundReport> report;
  if (c.bounds) {
    report = run.timed("diagnostics", [&] {
      const AllInOneSystem sys{pb.op, m, pb.rhs};
      const std::vector<double> norms = slice_opnorms(sys, gc);
      BoundParams params;
      params.p = c.p;
      params.opnorm_A = out.estimated_opnorm;
      params.opnorm_A0 = *std::max_element(norms.begin(), norms.end());
      BoundOptions opts;
      opts.same_operator = same_operator;
      return verify_bounds(sys, out.iterates, params, norms, opts);
    });
    summary["bound_violations"] = report->violations.size();
    summary["ell_min_upsilon"] = report->ell_min_upsilon;
    summary["ell_max_upsilon"] = report->ell_max_upsilon;
    summary["ell_min_gamma"] = report->ell_min_gamma;
    summary["ell_max_gamma"] = report->ell_max_gamma;
    summary["k_star"] = report->k_star ? json(*report->k_star) : json(nullptr);
    summary["nu"] = report->nu ? num(*report->nu) : json(nullptr);
    summary["norm_identity_error"] = num(report->norm_identity_error);
  }
  run.timed("emit", [&] {
    run.emit(out, report ? &*report : nullptr);
    run.write(".summary.json", summary.dump(1) + "\n");
  });
  man.converged = out.converged;
  return out.converged;
}

bool run_eigen(Run& run, RunManifest& man) {
  const ExperimentConfig& c = run.cfg();
  const Grid1D g(c.n, 0.0, 1.0);
  const auto triples = distinct_eigen_triples(g, c.eigen_count + 1);
  const TTOperator a = tt_neg_laplacian(3, g);
  const TTVector fast = laplacian_eigen_rhs(g, {triples.front()});
  TTVector slow =
      laplacian_eigen_rhs(g, std::vector<std::array<Index, 3>>(triples.begin() + 1, triples.end()));
  slow = tt_scale(slow, 1.0 / tt_norm(slow));
  const TTVector stacked = all_in_one_rhs({tt_scale(fast, 1.0 / tt_norm(fast)), slow});
  const TTOperator a2 = identity_tensorized(2, a);

  GmresConfig gc = solver_config(c);
  const auto go = [&](const TTOperator& op, const TTVector& b) {
    return tt_restarted_gmres(op, b, tt_zeros(b.modes()), gc);
  };
  const GmresOutcome of = run.timed("solve-fast", [&] { return go(a, fast); });
  const GmresOutcome os = run.timed("solve-slow", [&] { return go(a, slow); });
  const GmresOutcome oa = run.timed("solve-all-in-one", [&] { return go(a2, stacked); });

  double gap = 0;
  const std::size_t common = std::min(os.trace.size(), oa.trace.size());
  for (std::size_t k = 0; k < common; ++k)
    gap = std::max(gap, std::abs(oa.trace[k].eta_b - os.trace[k].eta_b));
  json summary{{"fast", outcome_summary(of)},
               {"slow", outcome_summary(os)},
               {"all_in_one", outcome_summary(oa)},
               {"max_eta_b_gap_all_in_one_vs_slow", num(gap)},
               {"common_iterations", common}};
  run.timed("emit", [&] {
    run.emit(of, nullptr, ".fast");
    run.emit(os, nullptr, ".slow");
    run.emit(oa, nullptr, ".all-in-one");
    run.write(".summary.json", summary.dump(1) + "\n");
  });
  man.converged = of.converged && os.converged && oa.converged;
  return man.converged;
}

bool run_prec_sweep(Run& run, RunManifest& man) {
  const ExperimentConfig& c = run.cfg();
  const Grid1D g(c.n, 0.0, 1.0);
  const TTOperator a = tt_neg_laplacian(c.d, g);
  json rows = json::array();
  std::string csv = "q,tau,max_rank,opnorm_estimate\n";
  run.timed("sweep", [&] {
    for (double tau : c.tau_list)
      for (Index q : c.q_list) {
        const TTOperator m = inv_laplacian_preconditioner(c.d, g, q, tau);
        const double est = estimate_l2_norm(a, m, c.norm_samples, c.seed, c.sample_rank);
        rows.push_back(json{{"q", q}, {"tau", tau}, {"max_rank", m.max_rank()},
                            {"ranks", m.ranks()}, {"opnorm_estimate", num(est)}});
        csv += std::to_string(q) + ',' + format_number(tau) + ',' + std::to_string(m.max_rank()) +
               ',' + format_number(est) + '\n';
      }
  });
  run.timed("emit", [&] {
    if (c.format == OutputFormat::Csv) run.write(".table.csv", csv);
    else run.write(".table.json", json{{"rows", rows}}.dump(1) + "\n");
  });
  man.converged = true;
  return true;
}

bool run_relaxed_compare(Run& run, RunManifest& man) {
  const ExperimentConfig& c = run.cfg();
  const Grid1D g(c.n, -1.0, 1.0);
  const ProblemInstance pb = run.timed("build", [&] { return convection_diffusion_problem(g); });
  std::optional<TTOperator> m;
  if (c.precondition)
    m = run.timed("preconditioner",
                  [&] { return inv_laplacian_preconditioner(3, g, addends(c), c.tau); });
  json summary = json::array();
  bool all = true;
  for (double delta : c.delta_list) {
    const std::string tag = ".delta-" + format_number(delta);
    GmresConfig constant = solver_config(c);
    constant.delta = delta;
    constant.epsilon = delta;
    constant.rounding_policy = RoundingPolicy::Constant;
    constant.stopping_criterion = StoppingCriterion::EtaAb;
    GmresConfig relaxed = constant;
    relaxed.epsilon = c.epsilon;
    relaxed.rounding_policy = RoundingPolicy::Relaxed;
    relaxed.stopping_criterion = StoppingCriterion::EtaTildeB;
    const GmresOutcome oc =
        run.timed("solve-constant" + tag, [&] { return solve(pb.op, m, pb.rhs, constant); });
    const GmresOutcome orx =
        run.timed("solve-relaxed" + tag, [&] { return solve(pb.op, m, pb.rhs, relaxed); });
    run.emit(oc, nullptr, tag + ".constant");
    run.emit(orx, nullptr, tag + ".relaxed");
    summary.push_back(
        json{{"delta", delta}, {"constant", outcome_summary(oc)}, {"relaxed", outcome_summary(orx)}});
    all = all && oc.converged;
  }
  run.write(".summary.json", json{{"runs", summary}}.dump(1) + "\n");
  man.converged = all;
  return true;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  RunManifest man;
  man.warnings = validate(cfg);
  man.config = to_key_values(cfg);
  man.version = kVersion;
  man.started = timestamp();
  Run run(cfg, out_dir, man);
  bool ok = false;
  switch (cfg.experiment) {
    case Experiment::Poisson:
    case Experiment::Convdiff: ok = run_single(run, man); break;
    case Experiment::ParamConvdiff:
    case Experiment::HeatParam:
    case Experiment::MultiRhsPoisson:
    case Experiment::MultiRhsConvdiff: ok = run_parametric(run, man); break;
    case Experiment::EigenRhs: ok = run_eigen(run, man); break;
    case Experiment::PrecSweep: ok = run_prec_sweep(run, man); break;
    case Experiment::RelaxedCompare: ok = run_relaxed_compare(run, man); break;
  }
  man.status = ok ? 0 : 1;
  man.finished = timestamp();
  const fs::path manifest = out_dir / (cfg.output + ".manifest.json");
  man.files.push_back(manifest.string());
  write_text(manifest, manifest_json(man).dump(1) + "\n");
  return man;
}

}  // namespace ttk::cli
