#include <cmath>
#include <random>

#include "ttkrylov/tt.hpp"

namespace ttk {

namespace {

void require_same_modes(const std::vector<Index>& a, const std::vector<Index>& b,
                        const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": mode mismatch");
}

void place(Core3& dst, const Core3& src, Index a_off, Index b_off, double scale = 1.0) {
  for (Index b = 0; b < src.right_rank(); ++b)
    for (Index i = 0; i < src.mode(); ++i)
      for (Index a = 0; a < src.left_rank(); ++a) dst(a + a_off, i, b + b_off) = scale * src(a, i, b);
}

Index total_rank(std::span<const TTVector> terms, Index k) {
  Index r = 0;
  for (const auto& t : terms) r += t.core(k).right_rank();
  return r;
}

}  // namespace

TTVector tt_combine(std::span<const TTVector> terms, std::span<const double> coeffs) {
  if (terms.empty()) throw ShapeError("tt_combine needs at least one term");
  if (terms.size() != coeffs.size()) throw ShapeError("tt_combine: coefficient count mismatch");
  const auto modes = terms.front().modes();
  for (const auto& t : terms) require_same_modes(modes, t.modes(), "tt_combine");
  const Index d = static_cast<Index>(modes.size());

  if (d == 1) {
    Core3 c(1, modes[0], 1);
    for (std::size_t t = 0; t < terms.size(); ++t)
      for (Index i = 0; i < modes[0]; ++i) c(0, i, 0) += coeffs[t] * terms[t].core(0)(0, i, 0);
    return TTVector({std::move(c)});
  }

  std::vector<Core3> cores;
  for (Index k = 0; k < d; ++k) {
    const Index r0 = k == 0 ? 1 : total_rank(terms, k - 1);
    const Index r1 = k == d - 1 ? 1 : total_rank(terms, k);
    Core3 c(r0, modes[k], r1);
    Index a_off = 0, b_off = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const Core3& src = terms[t].core(k);
      place(c, src, k == 0 ? 0 : a_off, k == d - 1 ? 0 : b_off, k == 0 ? coeffs[t] : 1.0);
      a_off += src.left_rank();
      b_off += src.right_rank();
    }
    cores.push_back(std::move(c));
  }
  return TTVector(std::move(cores));
}

TTVector tt_add(const TTVector& x, const TTVector& y) {
  const TTVector terms[] = {x, y};
  const double coeffs[] = {1.0, 1.0};
  return tt_combine(terms, coeffs);
}

TTOperator tt_add(const TTOperator& x, const TTOperator& y) {
  require_same_modes(x.row_modes(), y.row_modes(), "tt_add");
  require_same_modes(x.col_modes(), y.col_modes(), "tt_add");
  return unfuse(tt_add(fuse(x), fuse(y)), x.row_modes(), x.col_modes());
}

TTVector tt_scale(const TTVector& x, double c) {
  auto cores = x.cores();
  for (Index i = 0; i < cores[0].size(); ++i) cores[0].raw()[i] *= c;
  return TTVector(std::move(cores));
}

TTOperator tt_scale(const TTOperator& x, double c) {
  auto cores = x.cores();
  for (Index i = 0; i < cores[0].size(); ++i) cores[0].raw()[i] *= c;
  return TTOperator(std::move(cores));
}

double tt_inner(const TTVector& x, const TTVector& y) {
  require_same_modes(x.modes(), y.modes(), "tt_inner");
  Matrix g = Matrix::Ones(1, 1);
  for (Index k = 0; k < x.order(); ++k) {
    const Core3& cx = x.core(k);
    const Core3& cy = y.core(k);
    Matrix t = g * cy.right_unfolding();  // (rx0, n*ry1) laid out as (rx0, n, ry1)
    Eigen::Map<const Matrix> tl(t.data(), cx.left_rank() * cx.mode(), cy.right_rank());
    g = cx.left_unfolding().transpose() * tl;
  }
  return g(0, 0);
}

TTVector tt_apply(const TTOperator& a, const TTVector& x) {
  require_same_modes(a.col_modes(), x.modes(), "tt_apply");
  std::vector<Core3> out;
  for (Index k = 0; k < a.order(); ++k) {
    const Core4& ca = a.core(k);
    const Core3& cx = x.core(k);
    const Index ra0 = ca.left_rank(), n = ca.row_mode(), m = ca.col_mode(), ra1 = ca.right_rank();
    const Index rx0 = cx.left_rank(), rx1 = cx.right_rank();

    Matrix ap(ra0 * n * ra1, m);
    for (Index b = 0; b < ra1; ++b)
      for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < n; ++i)
          for (Index r = 0; r < ra0; ++r) ap(r + ra0 * (i + n * b), j) = ca(r, i, j, b);
    Matrix xp(m, rx0 * rx1);
    for (Index t = 0; t < rx1; ++t)
      for (Index j = 0; j < m; ++j)
        for (Index s = 0; s < rx0; ++s) xp(j, s + rx0 * t) = cx(s, j, t);
    Matrix z = ap * xp;

    Core3 y(rx0 * ra0, n, rx1 * ra1);
    for (Index t = 0; t < rx1; ++t)
      for (Index s = 0; s < rx0; ++s)
        for (Index b = 0; b < ra1; ++b)
          for (Index i = 0; i < n; ++i)
            for (Index r = 0; r < ra0; ++r)
              y(s + rx0 * r, i, t + rx1 * b) = z(r + ra0 * (i + n * b), s + rx0 * t);
    out.push_back(std::move(y));
  }
  return TTVector(std::move(out));
}

TTOperator tt_op_compose(const TTOperator& a, const TTOperator& b) {
  require_same_modes(a.col_modes(), b.row_modes(), "tt_op_compose");
  std::vector<Core4> out;
  for (Index k = 0; k < a.order(); ++k) {
    const Core4& ca = a.core(k);
    const Core4& cb = b.core(k);
    const Index ra0 = ca.left_rank(), n = ca.row_mode(), l = ca.col_mode(), ra1 = ca.right_rank();
    const Index rb0 = cb.left_rank(), m = cb.col_mode(), rb1 = cb.right_rank();

    Matrix ap(ra0 * n * ra1, l);
    for (Index t = 0; t < ra1; ++t)
      for (Index j = 0; j < l; ++j)
        for (Index i = 0; i < n; ++i)
          for (Index r = 0; r < ra0; ++r) ap(r + ra0 * (i + n * t), j) = ca(r, i, j, t);
    Matrix bp(l, rb0 * m * rb1);
    for (Index t = 0; t < rb1; ++t)
      for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < l; ++i)
          for (Index s = 0; s < rb0; ++s) bp(i, s + rb0 * (j + m * t)) = cb(s, i, j, t);
    Matrix z = ap * bp;

    Core4 c(rb0 * ra0, n, m, rb1 * ra1);
    for (Index tb = 0; tb < rb1; ++tb)
      for (Index j = 0; j < m; ++j)
        for (Index s = 0; s < rb0; ++s)
          for (Index ta = 0; ta < ra1; ++ta)
            for (Index i = 0; i < n; ++i)
              for (Index r = 0; r < ra0; ++r)
                c(s + rb0 * r, i, j, tb + rb1 * ta) =
                    z(r + ra0 * (i + n * ta), s + rb0 * (j + m * tb));
    out.push_back(std::move(c));
  }
  return TTOperator(std::move(out));
}

TTVector tt_random(const std::vector<Index>& modes, const std::vector<Index>& ranks,
                   std::uint64_t seed) {
  if (modes.empty()) throw ShapeError("tt_random: empty mode list");
  if (ranks.size() != modes.size() + 1) throw ShapeError("tt_random: rank chain length must be d+1");
  if (ranks.front() != 1 || ranks.back() != 1)
    throw ShapeError("tt_random: boundary ranks must be 1");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Core3> cores;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    Core3 c(ranks[k], modes[k], ranks[k + 1]);
    for (Index i = 0; i < c.size(); ++i) c.raw()[i] = normal(gen);
    cores.push_back(std::move(c));
  }
  TTVector x(std::move(cores));
  const double nrm = tt_norm(x);
  return nrm > 0 ? tt_scale(x, 1.0 / nrm) : x;
}

TTVector tt_slice_first_mode(const TTVector& x, Index ell) {
  if (x.order() < 2) throw ShapeError("slicing needs order >= 2");
  if (ell < 1 || ell > x.mode(0)) throw IndexError("slice index out of range");
  auto cores = x.cores();
  const Core3& first = cores[0];
  const Core3& second = cores[1];
  Matrix row = first.slice(ell - 1);  // 1 x r1
  Matrix merged = row * second.right_unfolding();
  Core3 c(1, second.mode(), second.right_rank(),
          std::vector<double>(merged.data(), merged.data() + merged.size()));
  std::vector<Core3> out;
  out.push_back(std::move(c));
  for (std::size_t k = 2; k < cores.size(); ++k) out.push_back(std::move(cores[k]));
  return TTVector(std::move(out));
}

TTOperator tt_op_slice(const TTOperator& a, Index ell, Index m) {
  if (a.order() < 2) throw ShapeError("slicing needs order >= 2");
  const Core4& first = a.core(0);
  if (ell < 1 || ell > first.row_mode() || m < 1 || m > first.col_mode())
    throw IndexError("operator slice index out of range");
  Matrix row(1, first.right_rank());
  for (Index b = 0; b < first.right_rank(); ++b) row(0, b) = first(0, ell - 1, m - 1, b);
  const Core3 second = a.core(1).fused();
  Matrix merged = row * second.right_unfolding();
  std::vector<Core4> out;
  out.emplace_back(1, a.core(1).row_mode(), a.core(1).col_mode(), a.core(1).right_rank(),
                   std::vector<double>(merged.data(), merged.data() + merged.size()));
  for (Index k = 2; k < a.order(); ++k) out.push_back(a.core(k));
  return TTOperator(std::move(out));
}

TTOperator tt_op_diag_slice(const TTOperator& a, Index ell) {
  if (a.order() < 2) throw ShapeError("slicing needs order >= 2");
  const Core4& first = a.core(0);
  if (first.row_mode() != first.col_mode())
    throw ShapeError("first core is not a diagonal selector");
  for (Index b = 0; b < first.right_rank(); ++b)
    for (Index j = 0; j < first.col_mode(); ++j)
      for (Index i = 0; i < first.row_mode(); ++i)
        if (i != j && first(0, i, j, b) != 0.0)
          throw ShapeError("first core is not a diagonal selector");
  return tt_op_slice(a, ell, ell);
}

}  // namespace ttk
