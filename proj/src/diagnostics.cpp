#include "ttkrylov/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ttk {

namespace {

double difference_norm(const TTVector& x, const TTVector& y) {
  const TTVector terms[] = {x, y};
  const double coeffs[] = {1.0, -1.0};
  return tt_norm_sum(terms, coeffs);
}

struct Slices {
  std::vector<TTOperator> a;
  std::vector<TTOperator> m;
  std::vector<TTVector> b;
};

Slices make_slices(const AllInOneSystem& sys) {
  Slices s;
  for (Index ell = 1; ell <= sys.p(); ++ell) {
    s.a.push_back(tt_op_diag_slice(sys.a, ell));
    if (sys.m) s.m.push_back(tt_op_diag_slice(*sys.m, ell));
    s.b.push_back(tt_slice_first_mode(sys.b, ell));
  }
  return s;
}

std::vector<SlicePoint> points(const Slices& s, const TTVector& x) {
  std::vector<SlicePoint> out;
  for (std::size_t l = 0; l < s.a.size(); ++l) {
    const TTVector xl = tt_slice_first_mode(x, static_cast<Index>(l) + 1);
    const TTVector image = s.m.empty() ? tt_apply(s.a[l], xl) : apply_composed(s.a[l], s.m[l], xl);
    SlicePoint pt;
    pt.residual_norm = difference_norm(image, s.b[l]);
    pt.image_norm = tt_norm(image);
    pt.x_norm = tt_norm(xl);
    pt.rhs_norm = tt_norm(s.b[l]);
    out.push_back(pt);
  }
  return out;
}

void check_system(const AllInOneSystem& sys) {
  if (sys.a.order() < 2) throw ShapeError("an all-in-one system needs at least two modes");
  if (sys.a.col_modes() != sys.b.modes() || sys.a.row_modes() != sys.b.modes())
    throw ShapeError("operator and right-hand side shapes are inconsistent");
  if (sys.m && sys.m->col_modes() != sys.b.modes())
    throw ShapeError("preconditioner shape is inconsistent");
}

Index argext(const std::vector<std::vector<double>>& series, bool want_max) {
  Index best = 0;
  double best_val = want_max ? -1.0 : std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < series.size(); ++l) {
    double s = 0;
    for (double v : series[l]) s += v * v;
    s = std::sqrt(s);
    if (want_max ? s > best_val : s < best_val) {
      best_val = s;
      best = static_cast<Index>(l) + 1;
    }
  }
  return best;
}

}  // namespace

void BoundParams::validate() const {
  if (p < 1) throw std::invalid_argument("p must be >= 1");
  if (!(opnorm_A > 0) || !(opnorm_A0 > 0)) throw std::invalid_argument("operator norms must be > 0");
  if (nu && (*nu < 0 || *nu >= 2)) throw std::invalid_argument("nu must lie in [0, 2)");
  if (opnorm_Ainv && !(*opnorm_Ainv > 0)) throw std::invalid_argument("opnorm_Ainv must be > 0");
  if (kappa2 && !(*kappa2 >= 1)) throw std::invalid_argument("kappa2 must be >= 1");
}

BackwardErrors backward_errors(const TTOperator& a, const TTOperator* m, const TTVector& x,
                               const TTVector& b, double opnorm) {
  const TTVector image = m == nullptr ? tt_apply(a, x) : apply_composed(a, *m, x);
  const double nb = tt_norm(b);
  if (nb == 0.0) throw std::invalid_argument("right-hand side has zero norm");
  BackwardErrors e;
  e.residual_norm = difference_norm(image, b);
  e.lsq_residual_norm = e.residual_norm;
  e.eta_b = e.residual_norm / nb;
  e.eta_tilde_b = e.eta_b;
  e.eta_Ab = e.residual_norm / (opnorm * tt_norm(x) + nb);
  return e;
}

BackwardErrors backward_errors(const TTOperator& a, const TTVector& x, const TTVector& b,
                               double opnorm) {
  return backward_errors(a, nullptr, x, b, opnorm);
}

std::vector<SlicePoint> slice_points(const AllInOneSystem& sys, const TTVector& x) {
  check_system(sys);
  return points(make_slices(sys), x);
}

std::vector<double> slice_opnorms(const AllInOneSystem& sys, const GmresConfig& sampling) {
  check_system(sys);
  const Slices s = make_slices(sys);
  std::vector<double> out;
  for (std::size_t l = 0; l < s.a.size(); ++l) {
    const std::uint64_t seed = sampling.seed + l;
    out.push_back(s.m.empty()
                      ? estimate_l2_norm(s.a[l], sampling.norm_samples, seed, sampling.sample_rank)
                      : estimate_l2_norm(s.a[l], s.m[l], sampling.norm_samples, seed,
                                         sampling.sample_rank));
  }
  return out;
}

std::vector<BackwardErrors> slice_backward_errors(const AllInOneSystem& sys, const TTVector& x,
                                                  const BoundParams& params,
                                                  const GmresConfig& sampling) {
  params.validate();
  const std::vector<double> norms = slice_opnorms(sys, sampling);
  const std::vector<SlicePoint> pts = slice_points(sys, x);
  std::vector<BackwardErrors> out;
  for (std::size_t l = 0; l < pts.size(); ++l) {
    const SlicePoint& pt = pts[l];
    BackwardErrors e;
    e.residual_norm = e.lsq_residual_norm = pt.residual_norm;
    e.eta_b = e.eta_tilde_b = pt.residual_norm / pt.rhs_norm;
    e.eta_Ab = pt.residual_norm / (norms[l] * pt.x_norm + pt.rhs_norm);
    out.push_back(e);
  }
  return out;
}

BoundFactors bound_factors(double x_norm, const std::vector<SlicePoint>& slices,
                           const BoundParams& params) {
  params.validate();
  const double sp = std::sqrt(static_cast<double>(params.p));
  const double num = params.opnorm_A * x_norm + sp;
  BoundFactors f;
  for (const SlicePoint& pt : slices) {
    f.rho.push_back(num / (pt.image_norm + 1.0));
    f.psi.push_back((x_norm + sp / params.opnorm_A0) / (pt.x_norm + 1.0 / params.opnorm_A0));
  }
  if (params.nu) {
    f.rho_star = num / (2.0 - *params.nu);
    if (params.kappa2) f.rho_dagger = sp * (1.0 + *params.kappa2) / (2.0 - *params.nu);
  }
  return f;
}

std::optional<Index> detect_stabilization(const std::vector<std::vector<double>>& series,
                                          Index window, double variation) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (series.empty()) return std::nullopt;
  const Index len = static_cast<Index>(series.front().size());
  for (Index k = 0; k + window <= len; ++k) {
    bool stable = true;
    for (const auto& s : series) {
      const auto [lo, hi] = std::minmax_element(s.begin() + k, s.begin() + k + window);
      if (!(*hi > 0) || (*hi - *lo) / *hi >= variation) {
        stable = false;
        break;
      }
    }
    if (stable) return k;
  }
  return std::nullopt;
}

BoundReport verify_bounds(const AllInOneSystem& sys,
                          const std::vector<std::pair<Index, TTVector>>& iterates,
                          const BoundParams& params, const std::vector<double>& slice_norm_estimates,
                          const BoundOptions& options) {
  params.validate();
  check_system(sys);
  const Index p = sys.p();
  if (params.p != p) throw std::invalid_argument("params.p does not match the system");
  if (static_cast<Index>(slice_norm_estimates.size()) != p)
    throw std::invalid_argument("one slice norm estimate per slice is required");

  const Slices s = make_slices(sys);
  const double norm_b = tt_norm(sys.b);
  const std::size_t nk = iterates.size();

  struct Point {
    double residual, x_norm;
    std::vector<SlicePoint> slices;
  };
  std::vector<Point> pts;
  BoundReport rep;
  for (const auto& [iter, x] : iterates) {
    const TTVector image = sys.m ? apply_composed(sys.a, *sys.m, x) : tt_apply(sys.a, x);
    Point pt{difference_norm(image, sys.b), tt_norm(x), points(s, x)};
    const TTVector terms[] = {image, sys.b};
    const double coeffs[] = {1.0, -1.0};
    const TTVector r = tt_round_sum(terms, coeffs, 0.0);
    const double whole = tt_norm(r);
    double sum = 0;
    for (Index l = 1; l <= p; ++l) {
      const double v = tt_norm(tt_slice_first_mode(r, l));
      sum += v * v;
    }
    if (whole > 0)
      rep.norm_identity_error =
          std::max(rep.norm_identity_error, std::abs(whole * whole - sum) / (whole * whole));
    pts.push_back(std::move(pt));
  }

  // Sampled norms are lower estimates; observed ratios ‖A_ℓ x_ℓ‖/‖x_ℓ‖ tighten them.
  rep.slice_opnorm = slice_norm_estimates;
  for (const Point& pt : pts)
    for (Index l = 0; l < p; ++l) {
      const SlicePoint& sl = pt.slices[l];
      if (sl.x_norm > 0)
        rep.slice_opnorm[l] = std::max(rep.slice_opnorm[l], sl.image_norm / sl.x_norm);
    }
  BoundParams eff = params;
  if (options.same_operator) {
    double shared = std::max(params.opnorm_A, params.opnorm_A0);
    for (double v : rep.slice_opnorm) shared = std::max(shared, v);
    std::fill(rep.slice_opnorm.begin(), rep.slice_opnorm.end(), shared);
    eff.opnorm_A = eff.opnorm_A0 = shared;
  }
  rep.opnorm_A = eff.opnorm_A;

  std::vector<std::vector<double>> images(p, std::vector<double>(nk));
  for (std::size_t k = 0; k < nk; ++k)
    for (Index l = 0; l < p; ++l) images[l][k] = pts[k].slices[l].image_norm;
  const std::optional<Index> kpos =
      detect_stabilization(images, options.window, options.window_variation);
  if (kpos) rep.k_star = iterates[*kpos].first;
  if (params.nu) {
    rep.nu = params.nu;
  } else if (kpos) {
    double nu = 0;
    for (std::size_t k = *kpos; k < nk; ++k)
      for (Index l = 0; l < p; ++l) nu = std::max(nu, std::abs(images[l][k] - 1.0));
    rep.nu = nu;
  }
  const bool nu_usable = rep.nu && *rep.nu < 2.0;
  if (nu_usable) eff.nu = rep.nu;
  else eff.nu.reset();
  std::optional<double> ainv = params.opnorm_Ainv;
  if (!ainv && params.kappa2) ainv = *params.kappa2 / eff.opnorm_A;

  rep.upsilon.assign(p, std::vector<double>(nk));
  rep.gamma.assign(p, std::vector<double>(nk));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double sp = std::sqrt(static_cast<double>(p));
  auto check = [&](Index iter, Index ell, const char* name, double lhs, double rhs) {
    if (lhs > rhs * (1.0 + options.slack))
      rep.violations.push_back({iter, ell, name, lhs, rhs});
  };

  for (std::size_t k = 0; k < nk; ++k) {
    const Index iter = iterates[k].first;
    const Point& pt = pts[k];
    const BoundFactors f = bound_factors(pt.x_norm, pt.slices, eff);
    const double eta_b = pt.residual / norm_b;
    const double eta_Ab = pt.residual / (eff.opnorm_A * pt.x_norm + norm_b);
    const bool after_kstar = kpos && k >= static_cast<std::size_t>(*kpos);
    for (Index l = 0; l < p; ++l) {
      const SlicePoint& sl = pt.slices[l];
      BoundRow row;
      row.iter = iter;
      row.ell = l + 1;
      row.eta_b = eta_b;
      row.eta_Ab = eta_Ab;
      row.eta_b_slice = sl.residual_norm / sl.rhs_norm;
      row.eta_Ab_slice = sl.residual_norm / (rep.slice_opnorm[l] * sl.x_norm + sl.rhs_norm);
      row.rho_ell = f.rho[l];
      row.psi_ell = f.psi[l];
      row.rho_star = after_kstar && f.rho_star ? *f.rho_star : nan;
      row.rho_dagger = nan;
      rep.upsilon[l][k] = f.rho[l];
      rep.gamma[l][k] = f.psi[l];

      check(iter, l + 1, "eta_b", row.eta_b_slice, sp * eta_b);
      check(iter, l + 1, "rho", row.eta_Ab_slice, eta_Ab * row.rho_ell);
      if (options.same_operator) check(iter, l + 1, "psi", row.eta_Ab_slice, eta_Ab * row.psi_ell);
      if (after_kstar && f.rho_star)
        check(iter, l + 1, "rho_star", row.eta_Ab_slice, eta_Ab * *f.rho_star);
      if (after_kstar && f.rho_dagger && ainv && pt.x_norm <= *ainv * sp) {
        row.rho_dagger = *f.rho_dagger;
        check(iter, l + 1, "rho_dagger", row.eta_Ab_slice, eta_Ab * *f.rho_dagger);
      }
      rep.rows.push_back(row);
    }
  }
  if (nk > 0) {
    rep.ell_min_upsilon = argext(rep.upsilon, false);
    rep.ell_max_upsilon = argext(rep.upsilon, true);
    rep.ell_min_gamma = argext(rep.gamma, false);
    rep.ell_max_gamma = argext(rep.gamma, true);
  }
  return rep;
}

}  // namespace ttk
