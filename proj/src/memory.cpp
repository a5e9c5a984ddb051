#include "izsfd/memory.hpp"

#include "izsfd/error.hpp"

#include <algorithm>
#include <string>

namespace izsfd {

MemoryMatrix init_memory(const Matrix& features) {
    if (features.rows() == 0) throw InvalidInput("init_memory needs at least one feature row");
    require_finite(features, "memory initialisation features");
    return MemoryMatrix{pinv(features.transpose() * features)};
}

Matrix align_prototypes(const MemoryMatrix& memory, const Matrix& w, const Matrix& features, const Matrix& targets) {
    if (features.cols() != memory.p.rows() || w.rows() != memory.p.rows())
        throw InvalidInput("memory, prototypes and features disagree in feature width");
    if (targets.rows() != features.rows() || targets.cols() != w.cols())
        throw InvalidInput("target shape does not match features and prototypes");
    return w + memory.p * features.transpose() * (targets - features * w);
}

RlsStep rls_step(const MemoryMatrix& memory, const Matrix& w, const Matrix& features, const Matrix& targets) {
    const auto d = memory.p.rows();
    if (memory.p.cols() != d) throw InvalidInput("memory matrix must be square");
    if (features.cols() != d)
        throw InvalidInput("feature width " + std::to_string(features.cols()) + " does not match memory size " +
                           std::to_string(d));
    if (w.rows() != d) throw InvalidInput("prototype matrix rows do not match memory size");
    if (targets.rows() != features.rows()) throw InvalidInput("target and feature row counts differ");
    if (targets.cols() != w.cols())
        throw InvalidInput("target width " + std::to_string(targets.cols()) + " does not match prototype width " +
                           std::to_string(w.cols()));
    if (features.rows() == 0) throw InvalidInput("rls update needs at least one row");
    require_finite(features, "rls features");
    require_finite(targets, "rls targets");

    const Matrix px = memory.p * features.transpose();  // d x n
    const Matrix inner = Matrix::Identity(features.rows(), features.rows()) + features * px;
    const Matrix v = px * pinv(inner);
    Matrix p_next = memory.p - v * (features * memory.p);
    Matrix w_next = w + p_next * features.transpose() * (targets - features * w);
    return RlsStep{MemoryMatrix{std::move(p_next)}, std::move(w_next), v};
}

RlsStep rls_update(const MemoryMatrix& memory, const Matrix& w, const Matrix& features, const Matrix& targets,
                   Eigen::Index chunk_rows) {
    if (chunk_rows < 1) throw InvalidInput("chunk size must be positive");
    if (features.rows() == 0) throw InvalidInput("rls update needs at least one row");
    RlsStep state{memory, w, Matrix()};
    for (Eigen::Index start = 0; start < features.rows(); start += chunk_rows) {
        const auto n = std::min(chunk_rows, features.rows() - start);
        state = rls_step(state.memory, state.prototypes, features.middleRows(start, n), targets.middleRows(start, n));
    }
    return state;
}

}  // namespace izsfd
