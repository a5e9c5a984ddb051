#include "izsfd/linalg.hpp"

#include "izsfd/error.hpp"

#include <string>

namespace izsfd {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite())
        throw InvalidInput(std::string(what) + " contains non-finite entries");
}

Matrix pinv(const Matrix& m) {
    require_finite(m, "pinv input");
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());

    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = sigma.size() > 0 ? kPinvRelTol * sigma(0) : 0.0;

    Vector inv = Vector::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff && sigma(i) > 0.0) inv(i) = 1.0 / sigma(i);

    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(static_cast<Eigen::Index>(indices.size()), m.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= static_cast<std::size_t>(m.rows()))
            throw InvalidInput("gather_rows: row index out of range");
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(indices[i]));
    }
    return out;
}

Matrix vstack(const std::vector<Matrix>& blocks) {
    Eigen::Index rows = 0;
    Eigen::Index cols = -1;
    for (const auto& b : blocks) {
        if (b.rows() == 0) continue;
        if (cols >= 0 && b.cols() != cols) throw InvalidInput("vstack: column mismatch");
        cols = b.cols();
        rows += b.rows();
    }
    if (cols < 0) {
        // All blocks empty; keep the first declared width if any.
        return Matrix(0, blocks.empty() ? 0 : blocks.front().cols());
    }
    Matrix out(rows, cols);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        if (b.rows() == 0) continue;
        out.middleRows(at, b.rows()) = b;
        at += b.rows();
    }
    return out;
}

Matrix hstack(const Matrix& left, const Matrix& right) {
    if (left.rows() != right.rows()) throw InvalidInput("hstack: row mismatch");
    Matrix out(left.rows(), left.cols() + right.cols());
    out.leftCols(left.cols()) = left;
    out.rightCols(right.cols()) = right;
    return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput("max_abs_diff: shape mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace izsfd
