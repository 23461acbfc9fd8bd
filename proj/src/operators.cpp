#include "ttkrylov/operators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ttk {

Grid1D::Grid1D(Index n_, double a_, double b_) : n(n_), a(a_), b(b_) {
  if (n < 2) throw std::invalid_argument("grid needs at least 2 interior nodes");
  if (!(b > a)) throw std::invalid_argument("grid endpoints must satisfy a < b");
}

Vector Grid1D::nodes() const {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = node(i + 1);
  return x;
}

ParamSet ParamSet::log_spaced(Index p, double lo, double hi) {
  if (p < 1) throw std::invalid_argument("parameter count must be positive");
  if (!(lo > 0) || hi < lo) throw std::invalid_argument("log-spaced range needs 0 < lo <= hi");
  ParamSet s;
  s.distribution = ParamDistribution::Log;
  s.lo = lo;
  s.hi = hi;
  const double l0 = std::log10(lo), l1 = std::log10(hi);
  for (Index i = 0; i < p; ++i) {
    const double t = p == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(p - 1);
    s.values.push_back(i == 0 ? lo : (i == p - 1 ? hi : std::pow(10.0, l0 + t * (l1 - l0))));
  }
  return s;
}

ParamSet ParamSet::uniform(Index p, double lo, double hi) {
  if (p < 1) throw std::invalid_argument("parameter count must be positive");
  if (hi < lo) throw std::invalid_argument("uniform range needs lo <= hi");
  ParamSet s;
  s.distribution = ParamDistribution::Uniform;
  s.lo = lo;
  s.hi = hi;
  for (Index i = 0; i < p; ++i) {
    const double t = p == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(p - 1);
    s.values.push_back(lo + t * (hi - lo));
  }
  return s;
}

Matrix laplacian_1d(const Grid1D& g) {
  const double s = 1.0 / (g.h() * g.h());
  Matrix l = Matrix::Zero(g.n, g.n);
  for (Index i = 0; i < g.n; ++i) {
    l(i, i) = -2.0 * s;
    if (i > 0) l(i, i - 1) = s;
    if (i + 1 < g.n) l(i, i + 1) = s;
  }
  return l;
}

Matrix gradient_1d(const Grid1D& g) {
  const double s = 1.0 / (2.0 * g.h());
  Matrix d = Matrix::Zero(g.n, g.n);
  for (Index i = 0; i + 1 < g.n; ++i) {
    d(i, i + 1) = s;
    d(i + 1, i) = -s;
  }
  return d;
}

TTOperator laplace_like(const std::vector<Matrix>& l, const std::vector<Matrix>& m,
                        const std::vector<Matrix>& r) {
  const std::size_t d = m.size();
  if (d == 0 || l.size() != d || r.size() != d)
    throw ShapeError("laplace_like needs d matrices in each list");
  for (std::size_t k = 0; k < d; ++k) {
    const Index n = m[k].rows();
    for (const Matrix* x : {&l[k], &m[k], &r[k]})
      if (x->rows() != n || x->cols() != n) throw ShapeError("laplace_like: size mismatch");
  }
  if (d == 1) return tt_kron({m[0]});

  std::vector<Core4> cores;
  for (std::size_t k = 0; k < d; ++k) {
    const Index n = m[k].rows();
    if (k == 0) {
      Core4 c(1, n, n, 2);
      c.set_block(0, 0, m[k]);
      c.set_block(0, 1, l[k]);
      cores.push_back(std::move(c));
    } else if (k + 1 == d) {
      Core4 c(2, n, n, 1);
      c.set_block(0, 0, r[k]);
      c.set_block(1, 0, m[k]);
      cores.push_back(std::move(c));
    } else {
      Core4 c(2, n, n, 2);
      c.set_block(0, 0, r[k]);
      c.set_block(1, 0, m[k]);
      c.set_block(1, 1, l[k]);
      cores.push_back(std::move(c));
    }
  }
  return TTOperator(std::move(cores));
}

TTOperator tt_laplacian(Index d, const Grid1D& g) {
  if (d < 1) throw std::invalid_argument("order must be positive");
  const Matrix id = Matrix::Identity(g.n, g.n);
  return laplace_like(std::vector<Matrix>(d, id), std::vector<Matrix>(d, laplacian_1d(g)),
                      std::vector<Matrix>(d, id));
}

TTOperator tt_neg_laplacian(Index d, const Grid1D& g) {
  return tt_scale(tt_laplacian(d, g), -1.0);
}

ProblemInstance poisson_problem(const Grid1D& g, Index d) {
  if (d < 1) throw std::invalid_argument("order must be positive");
  const Vector x = g.nodes();
  const Vector u = (1.0 - x.array().square()).matrix();
  std::vector<TTVector> terms;
  std::vector<double> coeffs;
  for (Index k = 0; k < d; ++k) {
    std::vector<Vector> f;
    for (Index j = 0; j < d; ++j) f.push_back(j == k ? Vector(Vector::Ones(g.n)) : u);
    terms.push_back(tt_rank_one(f));
    coeffs.push_back(2.0);
  }
  TTVector rhs = tt_combine(terms, coeffs);
  return ProblemInstance{tt_neg_laplacian(d, g), std::move(rhs), std::nullopt,
                         tt_rank_one(std::vector<Vector>(d, u)), "poisson"};
}

TTOperator convection_operator(const Grid1D& g) {
  const Vector x = g.nodes();
  const Matrix grad = gradient_1d(g);
  const Matrix id = Matrix::Identity(g.n, g.n);
  const Matrix one_minus_sq = (1.0 - x.array().square()).matrix().asDiagonal();
  const Matrix two_x = (2.0 * x).asDiagonal();
  TTOperator t1 = tt_kron({one_minus_sq * grad, two_x, id});
  TTOperator t2 = tt_kron({Matrix(-two_x), one_minus_sq * grad, id});
  return tt_add(t1, t2);
}

TTVector convection_diffusion_rhs(const Grid1D& g, double alpha) {
  const Vector x = g.nodes();
  const double h = g.h();
  const double yn = g.node(g.n);
  Vector fx = (alpha / (h * h) + x.array() * (1.0 - yn * yn) / h).matrix();
  Vector ey = Vector::Zero(g.n);
  ey(g.n - 1) = 1.0;
  return tt_rank_one({fx, ey, Vector::Ones(g.n)});
}

ProblemInstance convection_diffusion_problem(const Grid1D& g) {
  TTOperator a = tt_add(tt_neg_laplacian(3, g), convection_operator(g));
  return ProblemInstance{std::move(a), convection_diffusion_rhs(g, 1.0), std::nullopt,
                         std::nullopt, "convdiff"};
}

namespace {

Matrix indicator(const Grid1D& g, IndicatorBoundary boundary) {
  Vector diag = Vector::Zero(g.n);
  const double tol = 1e-12 * (g.b - g.a);
  for (Index i = 0; i < g.n; ++i) {
    const double x = g.node(i + 1);
    const double dist = std::abs(std::abs(x) - 0.5);
    if (dist <= tol) {
      if (boundary == IndicatorBoundary::Reject)
        throw std::invalid_argument("grid node " + std::to_string(i + 1) +
                                    " lies on the inclusion boundary |x| = 0.5");
      diag(i) = 1.0;
    } else if (std::abs(x) < 0.5) {
      diag(i) = 1.0;
    }
  }
  return diag.asDiagonal();
}

}  // namespace

HeatParts heat_parametrized_parts(const Grid1D& g, IndicatorBoundary boundary) {
  const Matrix dx = indicator(g, boundary);
  const Matrix lap = laplacian_1d(g);
  TTOperator b1 = tt_scale(laplace_like({dx, dx, dx}, {dx * lap, dx * lap, dx * lap}, {dx, dx, dx}),
                           -1.0);
  const double scale = 1.0 / std::pow(static_cast<double>(g.n), 1.5);
  TTVector c = tt_scale(tt_ones({g.n, g.n, g.n}), scale);
  return HeatParts{tt_neg_laplacian(3, g), std::move(b1), std::move(c)};
}

Index default_addends(Index n) {
  return std::max<Index>(1, static_cast<Index>(std::lround(static_cast<double>(n) / 4.0)));
}

TTOperator inv_laplacian_preconditioner(Index d, const Grid1D& g, Index q, double tau) {
  if (q < 1) throw std::invalid_argument("addend half-count q must be >= 1");
  if (tau < 0) throw std::invalid_argument("rounding accuracy must be non-negative");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian_1d(g));
  const Matrix& u = eig.eigenvectors();
  const Vector& lambda = eig.eigenvalues();

  // Every addend is diagonal in the eigenbasis of Δ₁, and X ↦ U X Uᵀ is an
  // isometry on each mode, so rounding the diagonals is rounding the operator.
  const double xi = std::numbers::pi / std::sqrt(static_cast<double>(q));
  std::vector<TTVector> terms;
  std::vector<double> coeffs;
  for (Index k = -q; k <= q; ++k) {
    const double t = std::exp(static_cast<double>(k) * xi);
    Vector f = (t * lambda.array()).exp().matrix();
    terms.push_back(tt_rank_one(std::vector<Vector>(d, f)));
    coeffs.push_back(xi * t);
  }
  TTVector diag = tt_round_sum(terms, coeffs, tau);

  std::vector<Core4> cores;
  for (const Core3& c : diag.cores()) {
    Core4 op(c.left_rank(), g.n, g.n, c.right_rank());
    Vector v(g.n);
    for (Index b = 0; b < c.right_rank(); ++b)
      for (Index a = 0; a < c.left_rank(); ++a) {
        for (Index i = 0; i < g.n; ++i) v(i) = c(a, i, b);
        op.set_block(a, b, u * v.asDiagonal() * u.transpose());
      }
    cores.push_back(std::move(op));
  }
  return TTOperator(std::move(cores));
}

TTOperator all_in_one_operator(const TTOperator& b0, const TTOperator& b1, const ParamSet& params) {
  if (b0.row_modes() != b1.row_modes() || b0.col_modes() != b1.col_modes())
    throw ShapeError("all_in_one_operator: B0 and B1 modes differ");
  const Index p = params.size();
  const Index d = b0.order();
  std::vector<Core4> cores;
  Core4 sel(1, p, p, 2);
  for (Index l = 0; l < p; ++l) {
    sel(0, l, l, 0) = 1.0;
    sel(0, l, l, 1) = params.values[l];
  }
  cores.push_back(std::move(sel));
  for (Index k = 0; k < d; ++k) {
    const Core4& c0 = b0.core(k);
    const Core4& c1 = b1.core(k);
    const Index n = c0.row_mode(), m = c0.col_mode();
    const Index r0 = k == 0 ? 2 : c0.left_rank() + c1.left_rank();
    const Index r1 = k + 1 == d ? 1 : c0.right_rank() + c1.right_rank();
    Core4 c(r0, n, m, r1);
    const Index a0 = k == 0 ? 1 : c0.left_rank();
    const Index b0off = k + 1 == d ? 0 : c0.right_rank();
    for (Index b = 0; b < c0.right_rank(); ++b)
      for (Index a = 0; a < c0.left_rank(); ++a) c.set_block(a, b, c0.block(a, b));
    for (Index b = 0; b < c1.right_rank(); ++b)
      for (Index a = 0; a < c1.left_rank(); ++a) c.set_block(a0 + a, b0off + b, c1.block(a, b));
    cores.push_back(std::move(c));
  }
  return TTOperator(std::move(cores));
}

TTOperator identity_tensorized(Index p, const TTOperator& c) {
  if (p < 1) throw std::invalid_argument("p must be positive");
  std::vector<Core4> cores;
  Core4 first(1, p, p, 1);
  for (Index l = 0; l < p; ++l) first(0, l, l, 0) = 1.0;
  cores.push_back(std::move(first));
  for (const auto& k : c.cores()) cores.push_back(k);
  return TTOperator(std::move(cores));
}

TTVector all_in_one_rhs(const std::vector<TTVector>& parts) {
  if (parts.empty()) throw ShapeError("all_in_one_rhs needs at least one part");
  const auto modes = parts.front().modes();
  for (const auto& x : parts)
    if (x.modes() != modes) throw ShapeError("all_in_one_rhs: parts have different modes");
  const Index p = static_cast<Index>(parts.size());
  const Index d = static_cast<Index>(modes.size());
  std::vector<Index> s(d + 1, 1);
  for (const auto& x : parts) {
    auto r = x.ranks();
    for (Index k = 0; k <= d; ++k) s[k] = std::max(s[k], r[k]);
  }

  std::vector<Core3> cores;
  Core3 sel(1, p, p);
  for (Index l = 0; l < p; ++l) sel(0, l, l) = 1.0;
  cores.push_back(std::move(sel));
  for (Index k = 0; k < d; ++k) {
    const Index r0 = p * s[k];
    const Index r1 = k + 1 == d ? 1 : p * s[k + 1];
    Core3 c(r0, modes[k], r1);
    for (Index l = 0; l < p; ++l) {
      const Core3& src = parts[l].core(k);
      const Index boff = k + 1 == d ? 0 : l * s[k + 1];
      for (Index b = 0; b < src.right_rank(); ++b)
        for (Index i = 0; i < src.mode(); ++i)
          for (Index a = 0; a < src.left_rank(); ++a) c(l * s[k] + a, i, boff + b) = src(a, i, b);
    }
    cores.push_back(std::move(c));
  }
  return TTVector(std::move(cores));
}

ProblemInstance parametric_convection_diffusion_problem(const Grid1D& g, const ParamSet& params) {
  TTOperator a = all_in_one_operator(convection_operator(g), tt_neg_laplacian(3, g), params);
  std::vector<TTVector> parts;
  for (double alpha : params.values) {
    TTVector r = convection_diffusion_rhs(g, alpha);
    parts.push_back(tt_scale(r, 1.0 / tt_norm(r)));
  }
  return ProblemInstance{std::move(a), all_in_one_rhs(parts), std::nullopt, std::nullopt,
                         "param-convdiff"};
}

ProblemInstance heat_problem(const Grid1D& g, const ParamSet& params, IndicatorBoundary boundary) {
  HeatParts parts = heat_parametrized_parts(g, boundary);
  TTOperator a = all_in_one_operator(parts.b0, parts.b1, params);
  std::vector<Core3> cores;
  cores.emplace_back(1, params.size(), 1, std::vector<double>(params.size(), 1.0));
  for (const auto& c : parts.c.cores()) cores.push_back(c);
  return ProblemInstance{std::move(a), TTVector(std::move(cores)), std::nullopt, std::nullopt,
                         "heat-param"};
}

ProblemInstance multi_rhs_problem(const ProblemInstance& base, Index p, Index rank_cap,
                                  std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("p must be positive");
  if (rank_cap < 1) throw std::invalid_argument("rank_cap must be positive");
  const auto space = base.rhs.modes();
  std::vector<Index> modes{p};
  modes.insert(modes.end(), space.begin(), space.end());
  const Index d = static_cast<Index>(modes.size());

  std::vector<Index> ranks(d + 1, 1);
  double left = 1.0;
  for (Index k = 1; k < d; ++k) {
    left *= static_cast<double>(modes[k - 1]);
    double right = 1.0;
    for (Index j = k; j < d; ++j) right *= static_cast<double>(modes[j]);
    ranks[k] = static_cast<Index>(std::min<double>({static_cast<double>(rank_cap), left, right}));
  }
  double numel = 1.0;
  for (Index n : space) numel *= static_cast<double>(n);
  TTVector e = tt_scale(tt_random(modes, ranks, seed), std::sqrt(numel * static_cast<double>(p)));

  const TTVector unit = tt_scale(base.rhs, 1.0 / tt_norm(base.rhs));
  std::vector<Core3> rep;
  rep.emplace_back(1, p, 1, std::vector<double>(p, 1.0));
  for (const auto& c : unit.cores()) rep.push_back(c);
  const TTVector terms[] = {TTVector(std::move(rep)), e};
  const double coeffs[] = {std::sqrt(numel), 1.0};
  TTVector c = tt_combine(terms, coeffs);

  auto cores = c.cores();
  for (Index l = 1; l <= p; ++l) {
    const double nrm = tt_norm(tt_slice_first_mode(c, l));
    for (Index b = 0; b < cores[0].right_rank(); ++b) cores[0](0, l - 1, b) /= nrm;
  }
  ProblemInstance out{identity_tensorized(p, base.op), TTVector(std::move(cores)), std::nullopt,
                      std::nullopt, "multi-rhs-" + base.label};
  if (base.preconditioner) out.preconditioner = identity_tensorized(p, *base.preconditioner);
  return out;
}

Vector laplacian_eigvec(Index n, Index j) {
  if (j < 1 || j > n) throw IndexError("eigenvector index out of range");
  Vector v(n);
  for (Index k = 1; k <= n; ++k)
    v(k - 1) = std::sin(static_cast<double>(j * k) * std::numbers::pi / static_cast<double>(n + 1));
  return v / v.norm();
}

double neg_laplacian_eigenvalue(const Grid1D& g, const std::vector<Index>& indices) {
  const double h2 = g.h() * g.h();
  double s = 0.0;
  for (Index j : indices)
    s += (2.0 - 2.0 * std::cos(static_cast<double>(j) * std::numbers::pi /
                               static_cast<double>(g.n + 1))) / h2;
  return s;
}

TTVector laplacian_eigen_rhs(const Grid1D& g, const std::vector<std::array<Index, 3>>& indices) {
  if (indices.empty()) throw std::invalid_argument("need at least one index triple");
  std::vector<TTVector> terms;
  for (const auto& t : indices)
    terms.push_back(tt_rank_one(
        {laplacian_eigvec(g.n, t[0]), laplacian_eigvec(g.n, t[1]), laplacian_eigvec(g.n, t[2])}));
  return tt_combine(terms, std::vector<double>(terms.size(), 1.0));
}

std::vector<std::array<Index, 3>> distinct_eigen_triples(const Grid1D& g, Index count) {
  const Index top = std::min(g.n, count);
  std::vector<std::pair<double, std::array<Index, 3>>> all;
  for (Index i = 1; i <= top; ++i)
    for (Index j = 1; j <= top; ++j)
      for (Index k = 1; k <= top; ++k)
        all.push_back({neg_laplacian_eigenvalue(g, {i, j, k}), {i, j, k}});
  std::sort(all.begin(), all.end());
  std::vector<std::array<Index, 3>> out;
  double last = -1.0;
  for (const auto& [lam, t] : all) {
    if (static_cast<Index>(out.size()) == count) break;
    if (out.empty() || lam - last > 1e-9 * lam) {
      out.push_back(t);
      last = lam;
    }
  }
  return out;
}

}  // namespace ttk
