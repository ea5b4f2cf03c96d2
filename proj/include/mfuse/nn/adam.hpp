#pragma once

#include "mfuse/nn/layers.hpp"

#include <cstddef>
#include <vector>

namespace mfuse::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over the trainable entries of a ParamList.
class Adam {
public:
    explicit Adam(ParamList params, AdamConfig config = {});

    /// One update at learning rate `lr`, then zeroes the gradients.
    /// Throws std::invalid_argument naming the parameter if any gradient is
    /// non-finite; no parameter is modified in that case.
    void step(double lr);

    std::size_t steps() const { return t_; }
    const ParamList& params() const { return params_; }
    const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
    const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }

private:
    ParamList params_;
    AdamConfig config_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// Constant `base` for epochs 1..hold, then multiplied by `factor` every
/// `step` epochs: lr(e) = base * factor^(floor((e - hold - 1) / step) + 1).
struct StepDecaySchedule {
    double base;
    int hold;
    double factor;
    int step;

    double at(int epoch) const;
};

/// 1e-3 halved every 10 epochs.
inline constexpr StepDecaySchedule denoiser_schedule{1e-3, 10, 0.5, 10};
/// 0.01 for 50 epochs, then x0.6 every 30 epochs.
inline constexpr StepDecaySchedule fusion_schedule{0.01, 50, 0.6, 30};

} // namespace mfuse::nn
