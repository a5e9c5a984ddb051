#pragma once

// Fully connected network: rectifier between layers, identity at the output.
// Row-vector convention: a layer computes  h * W + b  with W of shape
// (in x out) and b of shape (1 x out). Parameters are held flat as
// [W0, b0, W1, b1, ...] which is also the order the optimizer sees.

#include "izsfd/autodiff.hpp"
#include "izsfd/linalg.hpp"
#include "izsfd/random.hpp"

#include <vector>

namespace izsfd {

class Mlp {
public:
    Mlp() = default;

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    Mlp(std::vector<Eigen::Index> widths, Rng& rng);

    static Mlp zeros(std::vector<Eigen::Index> widths);

    // Rebuild from stored parameters; validates shapes against the widths.
    static Mlp from_parameters(std::vector<Eigen::Index> widths, std::vector<Matrix> params);

    const std::vector<Eigen::Index>& widths() const { return widths_; }
    Eigen::Index input_width() const { return widths_.front(); }
    Eigen::Index output_width() const { return widths_.back(); }
    std::size_t layer_count() const { return widths_.size() - 1; }
    std::size_t parameter_count() const;

    const Matrix& weight(std::size_t layer) const { return params_[2 * layer]; }
    const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1]; }
    Matrix& weight(std::size_t layer) { return params_[2 * layer]; }
    Matrix& bias(std::size_t layer) { return params_[2 * layer + 1]; }

    const std::vector<Matrix>& parameters() const { return params_; }
    std::vector<Matrix>& parameters() { return params_; }

    bool operator==(const Mlp& other) const;

private:
    static void check_widths(const std::vector<Eigen::Index>& widths);

    std::vector<Eigen::Index> widths_;
    std::vector<Matrix> params_;
};

// Copy of `net` accepting `extra` more input columns; the new input rows of
// the first weight matrix are zero, so outputs are unchanged for inputs whose
// extra columns are zero.
Mlp widen_input(const Mlp& net, Eigen::Index extra);

Matrix mlp_forward(const Mlp& net, const Matrix& x);

// Gradient of a scalar-output network with respect to its input at `x`.
Vector input_gradient(const Mlp& net, const Vector& x);

// Record the parameters on a tape, either as trainable leaves or constants.
std::vector<ad::Var> bind_parameters(ad::Tape& tape, const Mlp& net, bool trainable);

// Forward pass on the tape using parameters from bind_parameters().
ad::Var mlp_forward(std::span<const ad::Var> params, const ad::Var& x);

}  // namespace izsfd
