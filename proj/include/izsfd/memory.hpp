#pragma once

// Sample-free least-squares memory for the attribute prototype matrix.
//
// P summarises every feature row absorbed so far as (X^T X)^+, which lets W be
// refit on new rows without revisiting old ones:
//
//   v  = P X^T (I + X P X^T)^+
//   P' = P - v X P
//   W' = W + P' X^T (Z - X W)
//
// P stays (feature_dim x feature_dim) no matter how many rows arrive.

#include "izsfd/linalg.hpp"

namespace izsfd {

// Largest block absorbed in one recursion step; bigger updates are chunked.
inline constexpr Eigen::Index kRlsChunkRows = 256;

struct MemoryMatrix {
    Matrix p;
};

MemoryMatrix init_memory(const Matrix& features);

// W + P X^T (Z - X W): the prototype correction of the recursion with P held
// fixed. Applied once after init_memory it makes W agree with the rows P was
// built from (the least-squares solution plus W's null-space component).
Matrix align_prototypes(const MemoryMatrix& memory, const Matrix& w, const Matrix& features, const Matrix& targets);

struct RlsStep {
    MemoryMatrix memory;
    Matrix prototypes;
    Matrix gain;  // v of the last chunk processed
};

// One recursion on a single block of rows (no chunking).
RlsStep rls_step(const MemoryMatrix& memory, const Matrix& w, const Matrix& features, const Matrix& targets);

// Absorbs all rows, splitting into chunks of at most `chunk_rows`.
RlsStep rls_update(const MemoryMatrix& memory, const Matrix& w, const Matrix& features, const Matrix& targets,
                   Eigen::Index chunk_rows = kRlsChunkRows);

}  // namespace izsfd
