#include "izsfd/mlp.hpp"

#include "izsfd/error.hpp"

#include <cmath>
#include <string>

namespace izsfd {

void Mlp::check_widths(const std::vector<Eigen::Index>& widths) {
    if (widths.size() < 2) throw InvalidInput("Mlp needs at least an input and an output width");
    for (auto w : widths)
        if (w <= 0) throw InvalidInput("Mlp widths must be positive");
}

Mlp::Mlp(std::vector<Eigen::Index> widths, Rng& rng) : widths_(std::move(widths)) {
    check_widths(widths_);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const auto in = widths_[l];
        const auto out = widths_[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Matrix w(in, out);
        for (Eigen::Index i = 0; i < in; ++i)
            for (Eigen::Index j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
        Matrix b(1, out);
        for (Eigen::Index j = 0; j < out; ++j) b(0, j) = rng.uniform(-bound, bound);
        params_.push_back(std::move(w));
        params_.push_back(std::move(b));
    }
}

Mlp Mlp::zeros(std::vector<Eigen::Index> widths) {
    check_widths(widths);
    Mlp net;
    net.widths_ = std::move(widths);
    for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
        net.params_.push_back(Matrix::Zero(net.widths_[l], net.widths_[l + 1]));
        net.params_.push_back(Matrix::Zero(1, net.widths_[l + 1]));
    }
    return net;
}

Mlp Mlp::from_parameters(std::vector<Eigen::Index> widths, std::vector<Matrix> params) {
    Mlp net = zeros(std::move(widths));
    if (params.size() != net.params_.size()) throw InvalidInput("Mlp: wrong number of parameter blocks");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].rows() != net.params_[i].rows() || params[i].cols() != net.params_[i].cols())
            throw InvalidInput("Mlp: parameter block " + std::to_string(i) + " has the wrong shape");
        require_finite(params[i], "Mlp parameter");
    }
    net.params_ = std::move(params);
    return net;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
}

bool Mlp::operator==(const Mlp& other) const {
    if (widths_ != other.widths_) return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i] != other.params_[i]) return false;
    return true;
}

Mlp widen_input(const Mlp& net, Eigen::Index extra) {
    if (extra < 0) throw InvalidInput("widen_input: negative extension");
    auto widths = net.widths();
    widths.front() += extra;
    auto params = net.parameters();
    Matrix w0 = Matrix::Zero(widths.front(), widths[1]);
    w0.topRows(net.input_width()) = params.front();
    params.front() = std::move(w0);
    return Mlp::from_parameters(std::move(widths), std::move(params));
}

Matrix mlp_forward(const Mlp& net, const Matrix& x) {
    if (x.cols() != net.input_width())
        throw InvalidInput("mlp_forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                           std::to_string(net.input_width()));
    require_finite(x, "mlp_forward input");
    Matrix h = x;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Matrix next = h * net.weight(l);
        next.rowwise() += net.bias(l).row(0);
        if (l + 1 < net.layer_count()) next = next.cwiseMax(0.0);
        h = std::move(next);
    }
    return h;
}

Vector input_gradient(const Mlp& net, const Vector& x) {
    if (net.output_width() != 1) throw ContractViolation("input_gradient needs a scalar-output network");
    if (x.size() != net.input_width()) throw InvalidInput("input_gradient: width mismatch");
    ad::Tape tape;
    const auto params = bind_parameters(tape, net, false);
    const ad::Var in = tape.parameter(x.transpose());
    const ad::Var out = ad::sum(mlp_forward(params, in));
    const std::vector<ad::Var> wrt{in};
    return tape.backward(out, wrt).front().transpose();
}

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const Mlp& net, bool trainable) {
    std::vector<ad::Var> vars;
    vars.reserve(net.parameters().size());
    for (const auto& p : net.parameters()) vars.push_back(trainable ? tape.parameter(p) : tape.constant(p));
    return vars;
}

ad::Var mlp_forward(std::span<const ad::Var> params, const ad::Var& x) {
    if (params.size() < 2 || params.size() % 2 != 0) throw InvalidInput("mlp_forward: malformed parameter list");
    const std::size_t layers = params.size() / 2;
    if (x.cols() != params[0].rows()) throw InvalidInput("mlp_forward: input width mismatch");
    ad::Var h = x;
    for (std::size_t l = 0; l < layers; ++l) {
        h = ad::add_row(ad::matmul(h, params[2 * l]), params[2 * l + 1]);
        if (l + 1 < layers) h = ad::relu(h);
    }
    return h;
}

}  // namespace izsfd
