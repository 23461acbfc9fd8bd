#include "ttkrylov/tt.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ttk {

namespace {

std::string shape_str(Index r0, Index n, Index r1) {
  std::ostringstream os;
  os << "(" << r0 << "," << n << "," << r1 << ")";
  return os.str();
}

void check_dims(std::initializer_list<Index> dims) {
  for (Index v : dims)
    if (v < 1) throw ShapeError("core dimensions must be positive");
}

std::uint64_t product(const std::vector<Index>& v) {
  std::uint64_t p = 1;
  for (Index x : v) p *= static_cast<std::uint64_t>(x);
  return p;
}

// Converts between row-major (first index slowest) and column-major (first index
// fastest) layouts of the same tensor.
std::vector<double> reorder(const std::vector<double>& src, const std::vector<Index>& shape,
                            bool to_column_major) {
  const Index d = static_cast<Index>(shape.size());
  std::vector<Index> row_stride(d), col_stride(d);
  Index s = 1;
  for (Index k = d - 1; k >= 0; --k) {
    row_stride[k] = s;
    s *= shape[k];
  }
  s = 1;
  for (Index k = 0; k < d; ++k) {
    col_stride[k] = s;
    s *= shape[k];
  }
  std::vector<double> out(src.size());
  std::vector<Index> idx(d, 0);
  for (std::size_t lin = 0; lin < src.size(); ++lin) {
    Index r = 0, c = 0;
    for (Index k = 0; k < d; ++k) {
      r += idx[k] * row_stride[k];
      c += idx[k] * col_stride[k];
    }
    if (to_column_major)
      out[c] = src[r];
    else
      out[r] = src[c];
    for (Index k = d - 1; k >= 0; --k) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

}  // namespace

Core3::Core3(Index r0, Index n, Index r1) : r0_(r0), n_(n), r1_(r1) {
  check_dims({r0, n, r1});
  data_.assign(static_cast<std::size_t>(r0 * n * r1), 0.0);
}

Core3::Core3(Index r0, Index n, Index r1, std::vector<double> data)
    : r0_(r0), n_(n), r1_(r1), data_(std::move(data)) {
  check_dims({r0, n, r1});
  if (static_cast<Index>(data_.size()) != r0 * n * r1)
    throw ShapeError("core data size does not match shape " + shape_str(r0, n, r1));
}

Core4::Core4(Index r0, Index n, Index m, Index r1) : r0_(r0), n_(n), m_(m), r1_(r1) {
  check_dims({r0, n, m, r1});
  data_.assign(static_cast<std::size_t>(r0 * n * m * r1), 0.0);
}

Core4::Core4(Index r0, Index n, Index m, Index r1, std::vector<double> data)
    : r0_(r0), n_(n), m_(m), r1_(r1), data_(std::move(data)) {
  check_dims({r0, n, m, r1});
  if (static_cast<Index>(data_.size()) != r0 * n * m * r1)
    throw ShapeError("operator core data size does not match its shape");
}

Matrix Core4::block(Index a, Index b) const {
  Matrix out(n_, m_);
  for (Index j = 0; j < m_; ++j)
    for (Index i = 0; i < n_; ++i) out(i, j) = (*this)(a, i, j, b);
  return out;
}

void Core4::set_block(Index a, Index b, const Matrix& blk) {
  if (blk.rows() != n_ || blk.cols() != m_) throw ShapeError("block size mismatch");
  for (Index j = 0; j < m_; ++j)
    for (Index i = 0; i < n_; ++i) (*this)(a, i, j, b) = blk(i, j);
}

Core3 Core4::fused() const { return Core3(r0_, n_ * m_, r1_, data_); }

Core4 Core4::unfuse(const Core3& c, Index n, Index m) {
  if (c.mode() != n * m) throw ShapeError("fused mode does not factor as n*m");
  return Core4(c.left_rank(), n, m, c.right_rank(), c.values());
}

TTVector::TTVector(std::vector<Core3> cores) : cores_(std::move(cores)) {
  if (cores_.empty()) throw ShapeError("a TT vector needs at least one core");
  if (cores_.front().left_rank() != 1) throw ShapeError("leading boundary rank must be 1");
  if (cores_.back().right_rank() != 1) throw ShapeError("trailing boundary rank must be 1");
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
    if (cores_[k].right_rank() != cores_[k + 1].left_rank())
      throw ShapeError("rank mismatch between cores " + std::to_string(k + 1) + " and " +
                       std::to_string(k + 2));
}

std::vector<Index> TTVector::modes() const {
  std::vector<Index> out;
  for (const auto& c : cores_) out.push_back(c.mode());
  return out;
}

std::vector<Index> TTVector::ranks() const {
  std::vector<Index> out{1};
  for (const auto& c : cores_) out.push_back(c.right_rank());
  return out;
}

Index TTVector::max_rank() const {
  auto r = ranks();
  return *std::max_element(r.begin(), r.end());
}

TTOperator::TTOperator(std::vector<Core4> cores) : cores_(std::move(cores)) {
  if (cores_.empty()) throw ShapeError("a TT operator needs at least one core");
  if (cores_.front().left_rank() != 1) throw ShapeError("leading boundary rank must be 1");
  if (cores_.back().right_rank() != 1) throw ShapeError("trailing boundary rank must be 1");
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
    if (cores_[k].right_rank() != cores_[k + 1].left_rank())
      throw ShapeError("rank mismatch between operator cores " + std::to_string(k + 1) +
                       " and " + std::to_string(k + 2));
}

std::vector<Index> TTOperator::row_modes() const {
  std::vector<Index> out;
  for (const auto& c : cores_) out.push_back(c.row_mode());
  return out;
}

std::vector<Index> TTOperator::col_modes() const {
  std::vector<Index> out;
  for (const auto& c : cores_) out.push_back(c.col_mode());
  return out;
}

std::vector<Index> TTOperator::ranks() const {
  std::vector<Index> out{1};
  for (const auto& c : cores_) out.push_back(c.right_rank());
  return out;
}

Index TTOperator::max_rank() const {
  auto r = ranks();
  return *std::max_element(r.begin(), r.end());
}

DenseTensor::DenseTensor(std::vector<Index> shape_) : shape(std::move(shape_)) {
  data.assign(static_cast<std::size_t>(product(shape)), 0.0);
}

DenseTensor::DenseTensor(std::vector<Index> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (data.size() != product(shape)) throw ShapeError("dense data size does not match shape");
}

double DenseTensor::frobenius() const {
  return Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size())).norm();
}

TTVector make_tt_vector(std::vector<Core3> cores) { return TTVector(std::move(cores)); }
TTOperator make_tt_operator(std::vector<Core4> cores) { return TTOperator(std::move(cores)); }

std::uint64_t dense_budget() {
  if (const char* env = std::getenv("TTKRYLOV_DENSE_BUDGET")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && v >= 1.0) return static_cast<std::uint64_t>(v);
  }
  return 1000000;
}

namespace {

// Column-major dense (first index fastest) of a TT vector.
std::vector<double> contract_column_major(const TTVector& x) {
  Matrix partial = Matrix::Ones(1, 1);
  for (const auto& c : x.cores()) {
    const Index rows = partial.rows();
    Matrix next = partial * c.right_unfolding();  // rows x (n*r1)
    partial = Eigen::Map<Matrix>(next.data(), rows * c.mode(), c.right_rank());
  }
  return {partial.data(), partial.data() + partial.size()};
}

}  // namespace

DenseTensor tt_to_dense(const TTVector& x) { return tt_to_dense(x, dense_budget()); }

DenseTensor tt_to_dense(const TTVector& x, std::uint64_t budget) {
  auto shape = x.modes();
  const std::uint64_t total = product(shape);
  if (total > budget)
    throw DenseBudgetError("dense materialization of " + std::to_string(total) +
                           " entries exceeds budget " + std::to_string(budget));
  return DenseTensor(shape, reorder(contract_column_major(x), shape, false));
}

Matrix tt_op_to_dense(const TTOperator& a) { return tt_op_to_dense(a, dense_budget()); }

Matrix tt_op_to_dense(const TTOperator& a, std::uint64_t budget) {
  const auto rows = a.row_modes();
  const auto cols = a.col_modes();
  const std::uint64_t nr = product(rows), nc = product(cols);
  if (nr * nc > budget)
    throw DenseBudgetError("dense operator of " + std::to_string(nr * nc) +
                           " entries exceeds budget " + std::to_string(budget));
  // Fused column-major contraction: fused index f_k = i_k + n_k j_k, f_1 fastest.
  auto flat = contract_column_major(fuse(a));
  const Index d = a.order();
  Matrix out(static_cast<Index>(nr), static_cast<Index>(nc));
  std::vector<Index> i(d, 0), j(d, 0);
  for (Index J = 0; J < static_cast<Index>(nc); ++J) {
    for (Index I = 0; I < static_cast<Index>(nr); ++I) {
      Index lin = 0, stride = 1;
      for (Index k = 0; k < d; ++k) {
        lin += (i[k] + rows[k] * j[k]) * stride;
        stride *= rows[k] * cols[k];
      }
      out(I, J) = flat[lin];
      for (Index k = d - 1; k >= 0; --k) {
        if (++i[k] < rows[k]) break;
        i[k] = 0;
      }
    }
    for (Index k = d - 1; k >= 0; --k) {
      if (++j[k] < cols[k]) break;
      j[k] = 0;
    }
  }
  return out;
}

TTVector tt_zeros(const std::vector<Index>& modes) {
  std::vector<Core3> cores;
  for (Index n : modes) cores.emplace_back(1, n, 1);
  return TTVector(std::move(cores));
}

TTVector tt_ones(const std::vector<Index>& modes) {
  std::vector<Vector> f;
  for (Index n : modes) f.push_back(Vector::Ones(n));
  return tt_rank_one(f);
}

TTVector tt_rank_one(const std::vector<Vector>& factors) {
  std::vector<Core3> cores;
  for (const auto& v : factors)
    cores.emplace_back(1, v.size(), 1, std::vector<double>(v.data(), v.data() + v.size()));
  return TTVector(std::move(cores));
}

TTOperator tt_identity(const std::vector<Index>& modes) {
  std::vector<Matrix> f;
  for (Index n : modes) f.push_back(Matrix::Identity(n, n));
  return tt_kron(f);
}

TTOperator tt_kron(const std::vector<Matrix>& factors) {
  std::vector<Core4> cores;
  for (const auto& m : factors) {
    Core4 c(1, m.rows(), m.cols(), 1);
    c.set_block(0, 0, m);
    cores.push_back(std::move(c));
  }
  return TTOperator(std::move(cores));
}

StorageStats storage_stats(const TTVector& x) {
  StorageStats s;
  s.max_rank = x.max_rank();
  s.dense_entries = 1;
  for (const auto& c : x.cores()) {
    s.tt_entries += static_cast<std::uint64_t>(c.size());
    s.dense_entries *= static_cast<std::uint64_t>(c.mode());
  }
  s.compression_ratio = static_cast<double>(s.tt_entries) / static_cast<double>(s.dense_entries);
  return s;
}

StorageStats storage_stats(const TTOperator& a) {
  StorageStats s;
  s.max_rank = a.max_rank();
  s.dense_entries = 1;
  for (const auto& c : a.cores()) {
    s.tt_entries += static_cast<std::uint64_t>(c.size());
    s.dense_entries *= static_cast<std::uint64_t>(c.row_mode() * c.col_mode());
  }
  s.compression_ratio = static_cast<double>(s.tt_entries) / static_cast<double>(s.dense_entries);
  return s;
}

TTVector fuse(const TTOperator& a) {
  std::vector<Core3> cores;
  for (const auto& c : a.cores()) cores.push_back(c.fused());
  return TTVector(std::move(cores));
}

TTOperator unfuse(const TTVector& x, const std::vector<Index>& row_modes,
                  const std::vector<Index>& col_modes) {
  if (static_cast<Index>(row_modes.size()) != x.order() ||
      static_cast<Index>(col_modes.size()) != x.order())
    throw ShapeError("mode lists do not match the fused order");
  std::vector<Core4> cores;
  for (Index k = 0; k < x.order(); ++k)
    cores.push_back(Core4::unfuse(x.core(k), row_modes[k], col_modes[k]));
  return TTOperator(std::move(cores));
}

TTVector tt_from_dense(const DenseTensor& t, double delta) {
  if (t.shape.empty()) throw ShapeError("dense tensor must have order >= 1");
  for (Index n : t.shape)
    if (n < 1) throw ShapeError("dense tensor modes must be positive");
  if (t.data.size() != product(t.shape)) throw ShapeError("dense data size does not match shape");
  return detail::from_dense_column_major(reorder(t.data, t.shape, true), t.shape, delta);
}

namespace {

void write_values(std::ostream& os, const std::vector<Index>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << "\n";
}

std::vector<Index> read_values(std::istream& is, Index count) {
  std::vector<Index> v(count);
  for (auto& x : v)
    if (!(is >> x)) throw ShapeError("truncated debug dump");
  return v;
}

void expect_tag(std::istream& is, const std::string& tag) {
  std::string got;
  if (!(is >> got) || got != tag) throw ShapeError("debug dump: expected '" + tag + "'");
}

}  // namespace

void write_debug(std::ostream& os, const TTVector& x) {
  os << "ttvector\n" << x.order() << "\n";
  write_values(os, x.modes());
  write_values(os, x.ranks());
  os << std::setprecision(17);
  for (const auto& c : x.cores()) {
    bool first = true;
    for (Index a = 0; a < c.left_rank(); ++a)
      for (Index i = 0; i < c.mode(); ++i)
        for (Index b = 0; b < c.right_rank(); ++b) {
          os << (first ? "" : " ") << c(a, i, b);
          first = false;
        }
    os << "\n";
  }
}

void write_debug(std::ostream& os, const TTOperator& a) {
  os << "ttoperator\n" << a.order() << "\n";
  write_values(os, a.row_modes());
  write_values(os, a.col_modes());
  write_values(os, a.ranks());
  os << std::setprecision(17);
  for (const auto& c : a.cores()) {
    bool first = true;
    for (Index r = 0; r < c.left_rank(); ++r)
      for (Index i = 0; i < c.row_mode(); ++i)
        for (Index j = 0; j < c.col_mode(); ++j)
          for (Index b = 0; b < c.right_rank(); ++b) {
            os << (first ? "" : " ") << c(r, i, j, b);
            first = false;
          }
    os << "\n";
  }
}

TTVector read_debug_vector(std::istream& is) {
  expect_tag(is, "ttvector");
  Index d = 0;
  if (!(is >> d) || d < 1) throw ShapeError("debug dump: bad order");
  auto modes = read_values(is, d);
  auto ranks = read_values(is, d + 1);
  std::vector<Core3> cores;
  for (Index k = 0; k < d; ++k) {
    Core3 c(ranks[k], modes[k], ranks[k + 1]);
    for (Index a = 0; a < c.left_rank(); ++a)
      for (Index i = 0; i < c.mode(); ++i)
        for (Index b = 0; b < c.right_rank(); ++b)
          if (!(is >> c(a, i, b))) throw ShapeError("truncated debug dump");
    cores.push_back(std::move(c));
  }
  return TTVector(std::move(cores));
}

TTOperator read_debug_operator(std::istream& is) {
  expect_tag(is, "ttoperator");
  Index d = 0;
  if (!(is >> d) || d < 1) throw ShapeError("debug dump: bad order");
  auto rows = read_values(is, d);
  auto cols = read_values(is, d);
  auto ranks = read_values(is, d + 1);
  std::vector<Core4> cores;
  for (Index k = 0; k < d; ++k) {
    Core4 c(ranks[k], rows[k], cols[k], ranks[k + 1]);
    for (Index r = 0; r < c.left_rank(); ++r)
      for (Index i = 0; i < c.row_mode(); ++i)
        for (Index j = 0; j < c.col_mode(); ++j)
          for (Index b = 0; b < c.right_rank(); ++b)
            if (!(is >> c(r, i, j, b))) throw ShapeError("truncated debug dump");
    cores.push_back(std::move(c));
  }
  return TTOperator(std::move(cores));
}

}  // namespace ttk
