#pragma once

#include "izsfd/autodiff.hpp"
#include "izsfd/linalg.hpp"
#include "izsfd/schema.hpp"

namespace izsfd {

// Sum over attribute groups of the batch-mean negative log-likelihood of the
// per-group softmax. `targets` holds one one-hot block per group.
double grouped_softmax_nll(const Matrix& logits, const Matrix& targets, const AttributeSchema& schema);

ad::Var grouped_softmax_nll(const ad::Var& logits, const Matrix& targets, const AttributeSchema& schema);

// Single-group case: categorical cross-entropy against class indices.
ad::Var cross_entropy(const ad::Var& logits, std::span<const Eigen::Index> classes);

}  // namespace izsfd
