#include "izsfd/optim.hpp"

#include "izsfd/error.hpp"

#include <cmath>

namespace izsfd {

void OptimState::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
    if (params.size() != grads.size()) throw InvalidInput("optimizer: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols())
            throw InvalidInput("optimizer: gradient shape differs from parameter shape");
        require_finite(grads[i], "gradient");
    }
    if (first_.empty()) {
        for (const auto& p : params) {
            first_.push_back(Matrix::Zero(p.rows(), p.cols()));
            second_.push_back(Matrix::Zero(p.rows(), p.cols()));
        }
    } else if (first_.size() != params.size()) {
        throw InvalidInput("optimizer: parameter set changed between steps");
    }

    ++steps_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (first_[i].rows() != params[i].rows() || first_[i].cols() != params[i].cols())
            throw InvalidInput("optimizer: parameter shape changed between steps");
        first_[i] = b1 * first_[i] + (1.0 - b1) * grads[i];
        second_[i] = b2 * second_[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
        params[i].array() -= config_.learning_rate * (first_[i].array() / c1) /
                             ((second_[i].array() / c2).sqrt() + config_.epsilon);
    }
}

}  // namespace izsfd
