#pragma once

// Reference computations shared by the unit tests and the acceptance runner.
// Everything here is deliberately naive: dense finite differences, batch
// pseudo-inverse solves, direct evaluation of the Moore-Penrose conditions.

#include "izsfd/autodiff.hpp"
#include "izsfd/linalg.hpp"
#include "izsfd/random.hpp"

#include <functional>
#include <string>
#include <vector>

namespace izsfd::oracle {

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0);

// Entries pushed to magnitude >= margin, keeping their sign.
Matrix away_from_zero(Matrix m, double margin);

// Max-abs residuals of A X A = A, X A X = X, (A X)^T = A X, (X A)^T = X A.
struct PenroseResidual {
    double axa = 0.0;
    double xax = 0.0;
    double ax_symmetric = 0.0;
    double xa_symmetric = 0.0;
    double max() const;
};
PenroseResidual penrose(const Matrix& a, const Matrix& x);

// |analytic - numeric|_inf / max(|numeric|_inf, floor).
double relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-6);

using ScalarFn = std::function<double(const std::vector<Matrix>&)>;

// Central differences of `f` with respect to inputs[which].
Matrix numeric_gradient(const ScalarFn& f, std::vector<Matrix> inputs, std::size_t which, double h = 1e-6);

// One differentiable op with fixed input shapes. `build` maps leaves to the
// op output; `make_inputs` draws valid inputs (away from kinks and poles).
struct OpCase {
    std::string name;
    std::function<std::vector<Matrix>(Rng&)> make_inputs;
    std::function<ad::Var(const std::vector<ad::Var>&)> build;
};

// Every autodiff op plus the composite losses and the MLP forward pass.
std::vector<OpCase> op_cases();

// f(inputs) = sum(op(inputs) .* R) for a fixed random R. Returns the largest
// relative error between tape gradients and central differences over all
// inputs.
double first_order_error(const OpCase& op, std::uint64_t seed);

// g(inputs) = sum(grad_{x0} f .* S): differentiates the tape gradient once
// more and compares against central differences of the first-order tape
// gradient. Returns the largest relative error over all inputs.
double second_order_error(const OpCase& op, std::uint64_t seed);

// Chunked RLS against the batch pseudo-inverse least-squares solution on a
// random full-column-rank problem split into three chunks.
struct RlsCheck {
    Eigen::Index feature_dim = 0;
    double w_error = 0.0;     // max-abs |W_rls - pinv(X) Z|
    double gain_error = 0.0;  // max-abs |P' X^T - v| over the recursion steps
};
RlsCheck rls_equivalence(std::uint64_t seed);

// Gradient-penalty parameter gradients of a 2-unit critic against central
// differences of the scalar penalty (and of the full critic loss). Returns
// the larger relative error of the two.
double gradient_penalty_error(std::uint64_t seed);

}  // namespace izsfd::oracle
