#pragma once

// Reverse-mode automatic differentiation over 2-D matrices.
//
// Every op is evaluated eagerly and recorded on a Tape. Backward rules are
// written in terms of the same recorded ops, so a gradient returned by
// Tape::grad() is itself a Var on the tape and can be differentiated again.
// That is what the gradient penalty needs: d/dtheta of a norm of d/dx.
//
// Rectifier masks are recorded as constants, so the second derivative of relu
// is zero everywhere and its subgradient at exactly 0 is 0.

#include "izsfd/linalg.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace izsfd::ad {

class Tape;

// Handle to a recorded value. Cheap to copy; valid as long as its Tape lives.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    bool requires_grad() const;
    bool valid() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }

    // Convenience for 1x1 results.
    double scalar() const;

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    // Receives the upstream gradient and a per-parent "needed" mask; returns
    // one gradient per parent (an invalid Var where not needed).
    using BackwardFn = std::function<std::vector<Var>(const Var&, const std::vector<bool>&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var parameter(Matrix value);

    Var record(Matrix value, std::vector<Var> parents, BackwardFn backward);

    // Gradients of a 1x1 `output` with respect to `wrt`. The results live on
    // this tape and carry their own dependence on any grad-requiring leaves.
    std::vector<Var> grad(const Var& output, std::span<const Var> wrt);

    // Same as grad() but returns plain values.
    std::vector<Matrix> backward(const Var& loss, std::span<const Var> wrt);

    std::size_t size() const { return nodes_.size(); }

private:
    friend class Var;

    struct Node {
        Matrix value;
        bool requires_grad = false;
        std::vector<std::size_t> parents;
        BackwardFn backward;
    };

    void check_owned(const Var& v, const char* what) const;

    std::deque<Node> nodes_;
};

// ---- ops -------------------------------------------------------------------

// op(a) * op(b) with optional transposes.
Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var neg(const Var& a);

// a (n x c) + row (1 x c) broadcast over rows.
Var add_row(const Var& a, const Var& row);

Var sum_rows(const Var& a);                         // n x c -> 1 x c
Var broadcast_rows(const Var& row, Eigen::Index n); // 1 x c -> n x c
Var sum_cols(const Var& a);                         // n x c -> n x 1
Var broadcast_cols(const Var& col, Eigen::Index c); // n x 1 -> n x c
Var sum(const Var& a);                              // -> 1 x 1
Var mean(const Var& a);                             // -> 1 x 1

Var relu(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
// 1/a elementwise, with 1/0 := 0.
Var reciprocal(const Var& a);
// Per-row Euclidean norm (n x 1); the gradient at a zero row is 0.
Var row_norm(const Var& a);

// Log-softmax applied independently within consecutive column groups.
Var log_softmax_groups(const Var& a, std::span<const Eigen::Index> widths);
// Replaces every entry by the sum of its row within its column group.
Var group_sum(const Var& a, std::span<const Eigen::Index> widths);

Var concat_cols(const Var& left, const Var& right);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var pad_cols(const Var& a, Eigen::Index start, Eigen::Index total);

}  // namespace izsfd::ad
