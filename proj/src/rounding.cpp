#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "ttkrylov/tt.hpp"

namespace ttk {

namespace detail {

Index truncation_rank(const Vector& sigma, double tol, Index rows, Index cols) {
  const Index k = sigma.size();
  if (k == 0 || sigma(0) == 0.0) return 1;
  const double floor = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(rows, cols)) * sigma(0);
  Index numerical = 0;
  while (numerical < k && sigma(numerical) > floor) ++numerical;
  Index r = k;
  double tail = 0.0;
  while (r > 0) {
    const double next = tail + sigma(r - 1) * sigma(r - 1);
    if (std::sqrt(next) > tol) break;
    tail = next;
    --r;
  }
  return std::max<Index>(1, std::min(r, numerical));
}

void thin_qr(const Matrix& m, Matrix& q, Matrix& r) {
  const Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Matrix> qr(m);
  q = qr.householderQ() * Matrix::Identity(m.rows(), k);
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

TTVector from_dense_column_major(std::vector<double> data, const std::vector<Index>& shape,
                                 double delta) {
  if (delta < 0) throw std::invalid_argument("rounding accuracy must be non-negative");
  const Index d = static_cast<Index>(shape.size());
  const double nrm = Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size())).norm();
  if (nrm == 0.0) return tt_zeros(shape);
  if (d == 1) return TTVector({Core3(1, shape[0], 1, std::move(data))});

  const double tol = delta * nrm / std::sqrt(static_cast<double>(d - 1));
  Index rest = static_cast<Index>(data.size()) / shape[0];
  Matrix w = Eigen::Map<const Matrix>(data.data(), shape[0], rest);
  Index rprev = 1;
  std::vector<Core3> cores;
  for (Index k = 0; k + 1 < d; ++k) {
    Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index r = truncation_rank(svd.singularValues(), tol, w.rows(), w.cols());
    Matrix u = svd.matrixU().leftCols(r);
    cores.emplace_back(rprev, shape[k], r, std::vector<double>(u.data(), u.data() + u.size()));
    Matrix sv = svd.singularValues().head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
    rest /= shape[k + 1];
    w = Eigen::Map<const Matrix>(sv.data(), r * shape[k + 1], rest);
    rprev = r;
  }
  cores.emplace_back(rprev, shape[d - 1], 1, std::vector<double>(w.data(), w.data() + w.size()));
  return TTVector(std::move(cores));
}

}  // namespace detail

namespace {

struct Mixed {
  std::vector<Core3> cores;
  Index center = 0;
};

// Brings Σ c_t x_t into mixed-canonical form: cores before `center` are
// left-orthonormal, cores after it right-orthonormal. The block-diagonal sum
// is never formed; the center is placed where the dense intermediates are smallest.
Mixed orthogonalize_sum(std::span<const TTVector> terms, std::span<const double> coeffs) {
  if (terms.empty()) throw ShapeError("sum needs at least one term");
  if (terms.size() != coeffs.size()) throw ShapeError("coefficient count mismatch");
  const auto modes = terms.front().modes();
  for (const auto& t : terms)
    if (t.modes() != modes) throw ShapeError("sum terms have different modes");
  const Index d = static_cast<Index>(modes.size());
  const std::size_t nt = terms.size();

  std::vector<Index> total(d + 1, 0);
  total[0] = total[d] = 1;
  for (Index k = 1; k < d; ++k)
    for (const auto& t : terms) total[k] += t.core(k).left_rank();

  std::vector<double> lam(d + 1), mu(d + 1);
  lam[0] = 1;
  for (Index k = 1; k <= d; ++k)
    lam[k] = std::min<double>(lam[k - 1] * modes[k - 1], total[k]);
  mu[d] = 1;
  for (Index k = d - 1; k >= 0; --k) mu[k] = std::min<double>(modes[k] * mu[k + 1], total[k]);

  Index center = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < d; ++c) {
    double peak = lam[c] * modes[c] * mu[c + 1];
    for (Index k = 0; k < c; ++k) peak = std::max(peak, lam[k] * modes[k] * total[k + 1]);
    for (Index k = c + 1; k < d; ++k) peak = std::max(peak, total[k] * modes[k] * mu[k + 1]);
    if (peak < best) {
      best = peak;
      center = c;
    }
  }

  Mixed out;
  out.cores.resize(d);
  out.center = center;

  std::vector<Matrix> lft(nt);
  for (std::size_t t = 0; t < nt; ++t) lft[t] = Matrix::Constant(1, 1, coeffs[t]);
  Index rho = 1;
  for (Index k = 0; k < center; ++k) {
    const Index n = modes[k];
    Core3 dense(rho, n, total[k + 1]);
    std::vector<Index> offs(nt);
    Index off = 0;
    for (std::size_t t = 0; t < nt; ++t) {
      const Core3& c = terms[t].core(k);
      Matrix blk = lft[t] * c.right_unfolding();
      for (Index b = 0; b < c.right_rank(); ++b)
        for (Index i = 0; i < n; ++i)
          for (Index a = 0; a < rho; ++a) dense(a, i, off + b) = blk(a, i + n * b);
      offs[t] = off;
      off += c.right_rank();
    }
    Matrix q, r;
    detail::thin_qr(dense.left_unfolding(), q, r);
    out.cores[k] = Core3(rho, n, q.cols(), std::vector<double>(q.data(), q.data() + q.size()));
    for (std::size_t t = 0; t < nt; ++t)
      lft[t] = r.middleCols(offs[t], terms[t].core(k).right_rank());
    rho = q.cols();
  }

  std::vector<Matrix> rgt(nt, Matrix::Ones(1, 1));
  Index mu_r = 1;
  for (Index k = d - 1; k > center; --k) {
    const Index n = modes[k];
    Core3 dense(total[k], n, mu_r);
    std::vector<Index> offs(nt);
    Index off = 0;
    for (std::size_t t = 0; t < nt; ++t) {
      const Core3& c = terms[t].core(k);
      Matrix blk = c.left_unfolding() * rgt[t];  // (r0*n) x mu laid out as (r0, n, mu)
      const Index r0 = c.left_rank();
      for (Index b = 0; b < mu_r; ++b)
        for (Index i = 0; i < n; ++i)
          for (Index a = 0; a < r0; ++a) dense(off + a, i, b) = blk(a + r0 * i, b);
      offs[t] = off;
      off += r0;
    }
    Matrix q, r;
    detail::thin_qr(dense.right_unfolding().transpose(), q, r);
    Matrix qt = q.transpose();
    out.cores[k] = Core3(qt.rows(), n, mu_r, std::vector<double>(qt.data(), qt.data() + qt.size()));
    Matrix rt = r.transpose();
    for (std::size_t t = 0; t < nt; ++t)
      rgt[t] = rt.middleRows(offs[t], terms[t].core(k).left_rank());
    mu_r = qt.rows();
  }

  const Index n = modes[center];
  Matrix acc = Matrix::Zero(rho * n, mu_r);
  for (std::size_t t = 0; t < nt; ++t) {
    const Core3& c = terms[t].core(center);
    Matrix tmp = lft[t] * c.right_unfolding();
    Eigen::Map<const Matrix> tl(tmp.data(), rho * n, c.right_rank());
    acc.noalias() += tl * rgt[t];
  }
  out.cores[center] =
      Core3(rho, n, mu_r, std::vector<double>(acc.data(), acc.data() + acc.size()));
  return out;
}

double center_norm(const Mixed& m) {
  const Core3& c = m.cores[m.center];
  return Eigen::Map<const Vector>(c.raw(), c.size()).norm();
}

TTVector round_mixed(Mixed m, double delta) {
  auto& cores = m.cores;
  const Index d = static_cast<Index>(cores.size());
  for (Index k = m.center; k > 0; --k) {
    Matrix q, r;
    detail::thin_qr(cores[k].right_unfolding().transpose(), q, r);
    Matrix qt = q.transpose();
    const Index n = cores[k].mode(), r1 = cores[k].right_rank();
    cores[k] = Core3(qt.rows(), n, r1, std::vector<double>(qt.data(), qt.data() + qt.size()));
    Matrix prev = cores[k - 1].left_unfolding() * r.transpose();
    cores[k - 1] = Core3(cores[k - 1].left_rank(), cores[k - 1].mode(), qt.rows(),
                         std::vector<double>(prev.data(), prev.data() + prev.size()));
  }
  const double nrm = Eigen::Map<const Vector>(cores[0].raw(), cores[0].size()).norm();
  std::vector<Index> modes;
  for (const auto& c : cores) modes.push_back(c.mode());
  if (nrm == 0.0) return tt_zeros(modes);
  if (d == 1) return TTVector(std::move(cores));

  const double tol = delta * nrm / std::sqrt(static_cast<double>(d - 1));
  for (Index k = 0; k + 1 < d; ++k) {
    auto lu = cores[k].left_unfolding();
    Eigen::BDCSVD<Matrix> svd(lu, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index r = detail::truncation_rank(svd.singularValues(), tol, lu.rows(), lu.cols());
    Matrix u = svd.matrixU().leftCols(r);
    Matrix sv = svd.singularValues().head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
    const Index r0 = cores[k].left_rank(), n = cores[k].mode();
    cores[k] = Core3(r0, n, r, std::vector<double>(u.data(), u.data() + u.size()));
    Matrix next = sv * cores[k + 1].right_unfolding();
    cores[k + 1] = Core3(r, cores[k + 1].mode(), cores[k + 1].right_rank(),
                         std::vector<double>(next.data(), next.data() + next.size()));
  }
  return TTVector(std::move(cores));
}

}  // namespace

TTVector tt_round_sum(std::span<const TTVector> terms, std::span<const double> coeffs,
                      double delta) {
  if (delta < 0) throw std::invalid_argument("rounding accuracy must be non-negative");
  return round_mixed(orthogonalize_sum(terms, coeffs), delta);
}

double tt_norm_sum(std::span<const TTVector> terms, std::span<const double> coeffs) {
  return center_norm(orthogonalize_sum(terms, coeffs));
}

TTVector tt_round(const TTVector& x, double delta) {
  const double one = 1.0;
  return tt_round_sum(std::span<const TTVector>(&x, 1), std::span<const double>(&one, 1), delta);
}

TTOperator tt_round(const TTOperator& x, double delta) {
  return unfuse(tt_round(fuse(x), delta), x.row_modes(), x.col_modes());
}

double tt_norm(const TTVector& x) {
  const double one = 1.0;
  return tt_norm_sum(std::span<const TTVector>(&x, 1), std::span<const double>(&one, 1));
}

}  // namespace ttk
