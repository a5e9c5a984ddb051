#pragma once

// Adaptive-moment (Adam) optimizer with bias correction.

#include "izsfd/linalg.hpp"

#include <cstdint>
#include <vector>

namespace izsfd {

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    // Moments used for the adversarial networks.
    static AdamConfig adversarial(double lr = 2e-4) { return {lr, 0.5, 0.9, 1e-8}; }
};

class OptimState {
public:
    OptimState() = default;
    explicit OptimState(AdamConfig config) : config_(config) {}

    const AdamConfig& config() const { return config_; }
    std::uint64_t steps() const { return steps_; }

    // One update of `params` in place. Moment buffers are created on the
    // first call and must keep the same shapes afterwards.
    void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);

private:
    AdamConfig config_;
    std::uint64_t steps_ = 0;
    std::vector<Matrix> first_;
    std::vector<Matrix> second_;
};

}  // namespace izsfd
