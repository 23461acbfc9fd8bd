#pragma once

#include "ttkrylov/tt.hpp"

namespace ttk::detail {

TTVector from_dense_column_major(std::vector<double> data, const std::vector<Index>& shape,
                                 double delta);

/// Smallest rank whose discarded tail energy is within tol, never below 1.
Index truncation_rank(const Vector& sigma, double tol, Index rows, Index cols);

/// Thin QR of m: m = q * r with q having orthonormal columns.
void thin_qr(const Matrix& m, Matrix& q, Matrix& r);

}  // namespace ttk::detail
