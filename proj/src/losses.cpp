#include "izsfd/losses.hpp"

#include "izsfd/error.hpp"

#include <cmath>
#include <string>

namespace izsfd {

namespace {

void check_shapes(Eigen::Index rows, Eigen::Index cols, const Matrix& targets, const AttributeSchema& schema) {
    if (cols != schema.coded_width())
        throw SchemaMismatch("logits width " + std::to_string(cols) + " does not match coded width " +
                             std::to_string(schema.coded_width()));
    if (targets.rows() != rows || targets.cols() != cols) throw SchemaMismatch("targets shape differs from logits");
    if (rows == 0) throw InvalidInput("empty batch");
}

}  // namespace

double grouped_softmax_nll(const Matrix& logits, const Matrix& targets, const AttributeSchema& schema) {
    check_shapes(logits.rows(), logits.cols(), targets, schema);
    require_finite(logits, "logits");
    double total = 0.0;
    for (std::size_t g = 0; g < schema.group_count(); ++g) {
        const auto off = schema.offset(g);
        const auto w = schema.cardinality(g);
        double group = 0.0;
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            const auto seg = logits.row(r).segment(off, w);
            const double mx = seg.maxCoeff();
            const double lse = mx + std::log((seg.array() - mx).exp().sum());
            group -= (targets.row(r).segment(off, w).array() * (seg.array() - lse)).sum();
        }
        total += group / static_cast<double>(logits.rows());
    }
    return total;
}

ad::Var grouped_softmax_nll(const ad::Var& logits, const Matrix& targets, const AttributeSchema& schema) {
    check_shapes(logits.rows(), logits.cols(), targets, schema);
    ad::Tape& tape = *logits.tape();
    const ad::Var logp = ad::log_softmax_groups(logits, schema.cardinalities());
    const ad::Var picked = ad::mul(logp, tape.constant(targets));
    return ad::scale(ad::sum(picked), -1.0 / static_cast<double>(logits.rows()));
}

ad::Var cross_entropy(const ad::Var& logits, std::span<const Eigen::Index> classes) {
    const auto n = logits.rows();
    const auto c = logits.cols();
    if (static_cast<Eigen::Index>(classes.size()) != n) throw InvalidInput("cross_entropy: label count mismatch");
    Matrix onehot = Matrix::Zero(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = classes[static_cast<std::size_t>(i)];
        if (k < 0 || k >= c) throw InvalidInput("cross_entropy: class index out of range");
        onehot(i, k) = 1.0;
    }
    ad::Tape& tape = *logits.tape();
    const std::vector<Eigen::Index> widths{c};
    const ad::Var logp = ad::log_softmax_groups(logits, widths);
    return ad::scale(ad::sum(ad::mul(logp, tape.constant(onehot))), -1.0 / static_cast<double>(n));
}

}  // namespace izsfd
