#pragma once

// Dense f64 matrix substrate. Storage is Eigen's; every public operation in
// the library treats a Matrix as an immutable (rows x cols) value and rejects
// non-finite entries at module boundaries.

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace izsfd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Singular values below kPinvRelTol * sigma_max are treated as zero.
inline constexpr double kPinvRelTol = 1e-10;

bool all_finite(const Matrix& m);

// Throws InvalidInput naming `what` when `m` has a NaN or Inf entry.
void require_finite(const Matrix& m, std::string_view what);

// Moore-Penrose pseudo-inverse via SVD.
Matrix pinv(const Matrix& m);

// Rows of `m` at `indices`, in that order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

// Vertical concatenation; empty (0-row) blocks are skipped.
Matrix vstack(const std::vector<Matrix>& blocks);

// Horizontal concatenation of two blocks with equal row counts.
Matrix hstack(const Matrix& left, const Matrix& right);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace izsfd
