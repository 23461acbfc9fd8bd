#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttk {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DenseBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Order-3 core of shape (r0, n, r1). Entry (a, i, b) lives at a + r0*(i + n*b),
/// so both unfoldings are plain column-major matrices over the same buffer.
class Core3 {
 public:
  Core3() = default;
  Core3(Index r0, Index n, Index r1);
  Core3(Index r0, Index n, Index r1, std::vector<double> data);

  Index left_rank() const { return r0_; }
  Index mode() const { return n_; }
  Index right_rank() const { return r1_; }
  Index size() const { return r0_ * n_ * r1_; }

  double operator()(Index a, Index i, Index b) const { return data_[a + r0_ * (i + n_ * b)]; }
  double& operator()(Index a, Index i, Index b) { return data_[a + r0_ * (i + n_ * b)]; }

  const double* raw() const { return data_.data(); }
  double* raw() { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  // (r0*n) x r1
  Eigen::Map<const Matrix> left_unfolding() const { return {data_.data(), r0_ * n_, r1_}; }
  Eigen::Map<Matrix> left_unfolding() { return {data_.data(), r0_ * n_, r1_}; }
  // r0 x (n*r1)
  Eigen::Map<const Matrix> right_unfolding() const { return {data_.data(), r0_, n_ * r1_}; }
  Eigen::Map<Matrix> right_unfolding() { return {data_.data(), r0_, n_ * r1_}; }

  Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> slice(Index i) const {
    return {data_.data() + r0_ * i, r0_, r1_, Eigen::OuterStride<>(r0_ * n_)};
  }

 private:
  Index r0_ = 0, n_ = 0, r1_ = 0;
  std::vector<double> data_;
};

/// Order-4 core of shape (r0, n, m, r1); entry (a, i, j, b) at a + r0*(i + n*(j + m*b)).
/// Fusing (i, j) into i + n*j gives a Core3 over the same buffer.
class Core4 {
 public:
  Core4() = default;
  Core4(Index r0, Index n, Index m, Index r1);
  Core4(Index r0, Index n, Index m, Index r1, std::vector<double> data);

  Index left_rank() const { return r0_; }
  Index row_mode() const { return n_; }
  Index col_mode() const { return m_; }
  Index right_rank() const { return r1_; }
  Index size() const { return r0_ * n_ * m_ * r1_; }

  double operator()(Index a, Index i, Index j, Index b) const {
    return data_[a + r0_ * (i + n_ * (j + m_ * b))];
  }
  double& operator()(Index a, Index i, Index j, Index b) {
    return data_[a + r0_ * (i + n_ * (j + m_ * b))];
  }

  const double* raw() const { return data_.data(); }
  double* raw() { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  /// n x m matrix for bond indices (a, b).
  Matrix block(Index a, Index b) const;
  void set_block(Index a, Index b, const Matrix& blk);

  Core3 fused() const;
  static Core4 unfuse(const Core3& c, Index n, Index m);

 private:
  Index r0_ = 0, n_ = 0, m_ = 0, r1_ = 0;
  std::vector<double> data_;
};

class TTVector {
 public:
  explicit TTVector(std::vector<Core3> cores);

  Index order() const { return static_cast<Index>(cores_.size()); }
  Index mode(Index k) const { return cores_[k].mode(); }
  std::vector<Index> modes() const;
  std::vector<Index> ranks() const;
  Index max_rank() const;

  const Core3& core(Index k) const { return cores_[k]; }
  const std::vector<Core3>& cores() const { return cores_; }

 private:
  std::vector<Core3> cores_;
};

class TTOperator {
 public:
  explicit TTOperator(std::vector<Core4> cores);

  Index order() const { return static_cast<Index>(cores_.size()); }
  std::vector<Index> row_modes() const;
  std::vector<Index> col_modes() const;
  std::vector<Index> ranks() const;
  Index max_rank() const;

  const Core4& core(Index k) const { return cores_[k]; }
  const std::vector<Core4>& cores() const { return cores_; }

 private:
  std::vector<Core4> cores_;
};

struct StorageStats {
  Index max_rank = 0;
  std::uint64_t tt_entries = 0;
  std::uint64_t dense_entries = 0;
  double compression_ratio = 0.0;
};

/// Row-major dense tensor: the first index varies slowest.
struct DenseTensor {
  std::vector<Index> shape;
  std::vector<double> data;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<Index> shape_);
  DenseTensor(std::vector<Index> shape_, std::vector<double> data_);

  Index order() const { return static_cast<Index>(shape.size()); }
  Index numel() const { return static_cast<Index>(data.size()); }
  double frobenius() const;
};

TTVector make_tt_vector(std::vector<Core3> cores);
TTOperator make_tt_operator(std::vector<Core4> cores);

/// Largest entry count allowed by tt_to_dense and friends; read from
/// TTKRYLOV_DENSE_BUDGET, defaulting to 1e6.
std::uint64_t dense_budget();

TTVector tt_from_dense(const DenseTensor& t, double delta);
DenseTensor tt_to_dense(const TTVector& x);
DenseTensor tt_to_dense(const TTVector& x, std::uint64_t budget);
/// Matricized operator; rows and columns use row-major multi-indices.
Matrix tt_op_to_dense(const TTOperator& a);
Matrix tt_op_to_dense(const TTOperator& a, std::uint64_t budget);

TTVector tt_zeros(const std::vector<Index>& modes);
TTVector tt_ones(const std::vector<Index>& modes);
TTVector tt_rank_one(const std::vector<Vector>& factors);
TTOperator tt_identity(const std::vector<Index>& modes);
TTOperator tt_kron(const std::vector<Matrix>& factors);

TTVector tt_add(const TTVector& x, const TTVector& y);
TTOperator tt_add(const TTOperator& x, const TTOperator& y);
TTVector tt_scale(const TTVector& x, double c);
TTOperator tt_scale(const TTOperator& x, double c);

double tt_inner(const TTVector& x, const TTVector& y);
double tt_norm(const TTVector& x);

/// Exact linear combination Σ c_i x_i as a block TT (ranks add up).
TTVector tt_combine(std::span<const TTVector> terms, std::span<const double> coeffs);

TTVector tt_round(const TTVector& x, double delta);
TTOperator tt_round(const TTOperator& x, double delta);

/// Rounds Σ c_i x_i without materializing the block-diagonal sum.
TTVector tt_round_sum(std::span<const TTVector> terms, std::span<const double> coeffs,
                      double delta);
/// ‖Σ c_i x_i‖ through an orthogonal sweep of the implicit sum.
double tt_norm_sum(std::span<const TTVector> terms, std::span<const double> coeffs);

TTVector tt_apply(const TTOperator& a, const TTVector& x);
TTOperator tt_op_compose(const TTOperator& a, const TTOperator& b);

TTVector tt_random(const std::vector<Index>& modes, const std::vector<Index>& ranks,
                   std::uint64_t seed);

/// Slice along the first mode; ell is 1-based.
TTVector tt_slice_first_mode(const TTVector& x, Index ell);
/// Slice (ell, m) of the first operator mode pair, both 1-based.
TTOperator tt_op_slice(const TTOperator& a, Index ell, Index m);
/// Diagonal slice (ell, ell); requires a diagonal first core.
TTOperator tt_op_diag_slice(const TTOperator& a, Index ell);

StorageStats storage_stats(const TTVector& x);
StorageStats storage_stats(const TTOperator& a);

TTVector fuse(const TTOperator& a);
TTOperator unfuse(const TTVector& x, const std::vector<Index>& row_modes,
                  const std::vector<Index>& col_modes);

void write_debug(std::ostream& os, const TTVector& x);
void write_debug(std::ostream& os, const TTOperator& a);
TTVector read_debug_vector(std::istream& is);
TTOperator read_debug_operator(std::istream& is);

}  // namespace ttk
