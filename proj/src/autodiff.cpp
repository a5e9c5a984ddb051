#include "izsfd/autodiff.hpp"

#include "izsfd/error.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace izsfd::ad {

const Matrix& Var::value() const {
    if (!tape_) throw ContractViolation("use of an empty Var");
    return tape_->nodes_[id_].value;
}

bool Var::requires_grad() const {
    if (!tape_) throw ContractViolation("use of an empty Var");
    return tape_->nodes_[id_].requires_grad;
}

double Var::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw ContractViolation("scalar() on a non-1x1 value");
    return v(0, 0);
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), false, {}, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Matrix value) {
    nodes_.push_back(Node{std::move(value), true, {}, {}});
    return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v, const char* what) const {
    if (v.tape_ != this) throw ContractViolation(std::string(what) + " is not recorded on this tape");
}

Var Tape::record(Matrix value, std::vector<Var> parents, BackwardFn backward) {
    Node node;
    node.value = std::move(value);
    for (const auto& p : parents) {
        check_owned(p, "op operand");
        node.parents.push_back(p.id_);
        node.requires_grad = node.requires_grad || nodes_[p.id_].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

std::vector<Var> Tape::grad(const Var& output, std::span<const Var> wrt) {
    check_owned(output, "loss");
    const Matrix& out_value = output.value();
    if (out_value.rows() != 1 || out_value.cols() != 1)
        throw ContractViolation("grad() requires a 1x1 output");
    for (const auto& w : wrt) check_owned(w, "gradient target");

    const std::size_t out = output.id_;
    // reach: ancestors of the output. leads: nodes with a path to a target.
    // Only nodes with both flags need a gradient.
    std::vector<char> reach(out + 1, 0);
    reach[out] = 1;
    for (std::size_t i = out + 1; i-- > 0;) {
        if (!reach[i] || !nodes_[i].requires_grad) continue;
        for (auto p : nodes_[i].parents) reach[p] = 1;
    }
    std::vector<char> leads(out + 1, 0);
    for (const auto& w : wrt)
        if (w.id_ <= out) leads[w.id_] = 1;
    for (std::size_t i = 0; i <= out; ++i) {
        if (leads[i] || !nodes_[i].requires_grad) continue;
        for (auto p : nodes_[i].parents)
            if (leads[p]) {
                leads[i] = 1;
                break;
            }
    }

    std::vector<Var> grads(out + 1);
    grads[out] = constant(Matrix::Ones(1, 1));

    for (std::size_t i = out + 1; i-- > 0;) {
        if (!reach[i] || !leads[i] || !grads[i].valid()) continue;
        const auto parents = nodes_[i].parents;
        if (!nodes_[i].requires_grad || !nodes_[i].backward) continue;

        std::vector<bool> need(parents.size());
        bool any = false;
        for (std::size_t j = 0; j < parents.size(); ++j) {
            need[j] = leads[parents[j]] && nodes_[parents[j]].requires_grad;
            any = any || need[j];
        }
        if (!any) continue;

        const BackwardFn fn = nodes_[i].backward;
        const std::vector<Var> pg = fn(grads[i], need);
        for (std::size_t j = 0; j < parents.size(); ++j) {
            if (!need[j] || !pg[j].valid()) continue;
            const auto p = parents[j];
            grads[p] = grads[p].valid() ? add(grads[p], pg[j]) : pg[j];
        }
    }

    std::vector<Var> result;
    result.reserve(wrt.size());
    for (const auto& w : wrt) {
        if (w.id_ <= out && grads[w.id_].valid())
            result.push_back(grads[w.id_]);
        else
            result.push_back(constant(Matrix::Zero(w.rows(), w.cols())));
    }
    return result;
}

std::vector<Matrix> Tape::backward(const Var& loss, std::span<const Var> wrt) {
    const auto g = grad(loss, wrt);
    std::vector<Matrix> values;
    values.reserve(g.size());
    for (const auto& v : g) values.push_back(v.value());
    return values;
}

// ---- ops -------------------------------------------------------------------

namespace {

Tape& tape_of(const Var& a) {
    if (!a.valid()) throw ContractViolation("op on an empty Var");
    return *a.tape();
}

void same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput(std::string(op) + ": shape mismatch");
}

}  // namespace

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const auto inner_a = ta ? av.rows() : av.cols();
    const auto inner_b = tb ? bv.cols() : bv.rows();
    if (inner_a != inner_b) throw InvalidInput("matmul: inner dimension mismatch");

    Matrix value;
    if (!ta && !tb) value.noalias() = av * bv;
    else if (!ta && tb) value.noalias() = av * bv.transpose();
    else if (ta && !tb) value.noalias() = av.transpose() * bv;
    else value.noalias() = av.transpose() * bv.transpose();

    return tape_of(a).record(std::move(value), {a, b},
        [a, b, ta, tb](const Var& g, const std::vector<bool>& need) {
            Var ga, gb;
            if (!ta && !tb) {
                if (need[0]) ga = matmul(g, b, false, true);
                if (need[1]) gb = matmul(a, g, true, false);
            } else if (!ta && tb) {
                if (need[0]) ga = matmul(g, b, false, false);
                if (need[1]) gb = matmul(g, a, true, false);
            } else if (ta && !tb) {
                if (need[0]) ga = matmul(b, g, false, true);
                if (need[1]) gb = matmul(a, g, false, false);
            } else {
                if (need[0]) ga = matmul(b, g, true, true);
                if (need[1]) gb = matmul(g, a, true, true);
            }
            return std::vector<Var>{ga, gb};
        });
}

Var add(const Var& a, const Var& b) {
    same_shape(a, b, "add");
    return tape_of(a).record(a.value() + b.value(), {a, b},
        [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
    same_shape(a, b, "sub");
    return tape_of(a).record(a.value() - b.value(), {a, b},
        [](const Var& g, const std::vector<bool>& need) {
            return std::vector<Var>{g, need[1] ? neg(g) : Var{}};
        });
}

Var mul(const Var& a, const Var& b) {
    same_shape(a, b, "mul");
    return tape_of(a).record(a.value().cwiseProduct(b.value()), {a, b},
        [a, b](const Var& g, const std::vector<bool>& need) {
            return std::vector<Var>{need[0] ? mul(g, b) : Var{}, need[1] ? mul(g, a) : Var{}};
        });
}

Var scale(const Var& a, double c) {
    return tape_of(a).record(a.value() * c, {a},
        [c](const Var& g, const std::vector<bool>&) { return std::vector<Var>{scale(g, c)}; });
}

Var add_scalar(const Var& a, double c) {
    return tape_of(a).record(a.value().array() + c, {a},
        [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{g}; });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var add_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw InvalidInput("add_row: shape mismatch");
    Matrix value = a.value();
    value.rowwise() += row.value().row(0);
    return tape_of(a).record(std::move(value), {a, row},
        [](const Var& g, const std::vector<bool>& need) {
            return std::vector<Var>{g, need[1] ? sum_rows(g) : Var{}};
        });
}

Var sum_rows(const Var& a) {
    const auto n = a.rows();
    return tape_of(a).record(a.value().colwise().sum(), {a},
        [n](const Var& g, const std::vector<bool>&) {
            return std::vector<Var>{broadcast_rows(g, n)};
        });
}

Var broadcast_rows(const Var& row, Eigen::Index n) {
    if (row.rows() != 1) throw InvalidInput("broadcast_rows: expects a single row");
    return tape_of(row).record(row.value().replicate(n, 1), {row},
        [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{sum_rows(g)}; });
}

Var sum_cols(const Var& a) {
    const auto c = a.cols();
    return tape_of(a).record(a.value().rowwise().sum(), {a},
        [c](const Var& g, const std::vector<bool>&) {
            return std::vector<Var>{broadcast_cols(g, c)};
        });
}

Var broadcast_cols(const Var& col, Eigen::Index c) {
    if (col.cols() != 1) throw InvalidInput("broadcast_cols: expects a single column");
    return tape_of(col).record(col.value().replicate(1, c), {col},
        [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{sum_cols(g)}; });
}

Var sum(const Var& a) {
    const auto n = a.rows();
    const auto c = a.cols();
    Matrix value(1, 1);
    value(0, 0) = a.value().sum();
    return tape_of(a).record(std::move(value), {a},
        [n, c](const Var& g, const std::vector<bool>&) {
            return std::vector<Var>{broadcast_rows(broadcast_cols(g, c), n)};
        });
}

Var mean(const Var& a) {
    if (a.value().size() == 0) throw InvalidInput("mean of an empty matrix");
    return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var relu(const Var& a) {
    Tape& t = tape_of(a);
    const Matrix mask = (a.value().array() > 0.0).cast<double>().matrix();
    Matrix value = a.value().cwiseProduct(mask);
    Var m = t.constant(mask);
    return t.record(std::move(value), {a},
        [m](const Var& g, const std::vector<bool>&) { return std::vector<Var>{mul(g, m)}; });
}

Var exp(const Var& a) {
    return tape_of(a).record(a.value().array().exp().matrix(), {a},
        [a](const Var& g, const std::vector<bool>&) { return std::vector<Var>{mul(g, exp(a))}; });
}

Var square(const Var& a) { return mul(a, a); }

Var reciprocal(const Var& a) {
    Matrix value = a.value().unaryExpr([](double x) { return x == 0.0 ? 0.0 : 1.0 / x; });
    return tape_of(a).record(std::move(value), {a},
        [a](const Var& g, const std::vector<bool>&) {
            const Var r = reciprocal(a);
            return std::vector<Var>{neg(mul(g, mul(r, r)))};
        });
}

Var row_norm(const Var& a) {
    Matrix value = a.value().rowwise().norm();
    const auto c = a.cols();
    return tape_of(a).record(std::move(value), {a},
        [a, c](const Var& g, const std::vector<bool>&) {
            // d|a|/da = a / |a|, taken as 0 on a zero row.
            const Var inv = reciprocal(row_norm(a));
            return std::vector<Var>{mul(a, broadcast_cols(mul(g, inv), c))};
        });
}

namespace {

void check_widths(std::span<const Eigen::Index> widths, Eigen::Index cols, const char* op) {
    const Eigen::Index total = std::accumulate(widths.begin(), widths.end(), Eigen::Index{0});
    if (total != cols) throw SchemaMismatch(std::string(op) + ": group widths do not sum to column count");
}

}  // namespace

Var group_sum(const Var& a, std::span<const Eigen::Index> widths) {
    check_widths(widths, a.cols(), "group_sum");
    const Matrix& av = a.value();
    Matrix value(av.rows(), av.cols());
    Eigen::Index at = 0;
    for (auto w : widths) {
        const Vector s = av.middleCols(at, w).rowwise().sum();
        value.middleCols(at, w) = s.replicate(1, w);
        at += w;
    }
    std::vector<Eigen::Index> ws(widths.begin(), widths.end());
    return tape_of(a).record(std::move(value), {a},
        [ws](const Var& g, const std::vector<bool>&) { return std::vector<Var>{group_sum(g, ws)}; });
}

Var log_softmax_groups(const Var& a, std::span<const Eigen::Index> widths) {
    check_widths(widths, a.cols(), "log_softmax_groups");
    const Matrix& av = a.value();
    Matrix value(av.rows(), av.cols());
    Eigen::Index at = 0;
    for (auto w : widths) {
        for (Eigen::Index r = 0; r < av.rows(); ++r) {
            const auto seg = av.row(r).segment(at, w);
            const double mx = seg.maxCoeff();
            const double lse = mx + std::log((seg.array() - mx).exp().sum());
            value.row(r).segment(at, w) = seg.array() - lse;
        }
        at += w;
    }
    std::vector<Eigen::Index> ws(widths.begin(), widths.end());
    return tape_of(a).record(std::move(value), {a},
        [a, ws](const Var& g, const std::vector<bool>&) {
            // d/da = g - softmax * groupsum(g)
            const Var soft = exp(log_softmax_groups(a, ws));
            return std::vector<Var>{sub(g, mul(soft, group_sum(g, ws)))};
        });
}

Var concat_cols(const Var& left, const Var& right) {
    const auto lc = left.cols();
    const auto rc = right.cols();
    return tape_of(left).record(hstack(left.value(), right.value()), {left, right},
        [lc, rc](const Var& g, const std::vector<bool>& need) {
            return std::vector<Var>{need[0] ? slice_cols(g, 0, lc) : Var{},
                                    need[1] ? slice_cols(g, lc, rc) : Var{}};
        });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols())
        throw InvalidInput("slice_cols: range out of bounds");
    const auto total = a.cols();
    return tape_of(a).record(a.value().middleCols(start, count), {a},
        [start, total](const Var& g, const std::vector<bool>&) {
            return std::vector<Var>{pad_cols(g, start, total)};
        });
}

Var pad_cols(const Var& a, Eigen::Index start, Eigen::Index total) {
    if (start < 0 || start + a.cols() > total) throw InvalidInput("pad_cols: range out of bounds");
    Matrix value = Matrix::Zero(a.rows(), total);
    value.middleCols(start, a.cols()) = a.value();
    const auto count = a.cols();
    return tape_of(a).record(std::move(value), {a},
        [start, count](const Var& g, const std::vector<bool>&) {
            return std::vector<Var>{slice_cols(g, start, count)};
        });
}

}  // namespace izsfd::ad
