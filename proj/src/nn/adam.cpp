#include "mfuse/nn/adam.hpp"

#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::nn {

Adam::Adam(ParamList params, AdamConfig config) : params_(trainable(params)), config_(config)
{
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.numel(), 0.0);
        v_.emplace_back(p.tensor.numel(), 0.0);
    }
}

void Adam::step(double lr)
{
    for (const auto& p : params_)
        for (std::size_t i = 0; i < p.tensor.grad().size(); ++i)
            if (!std::isfinite(p.tensor.grad()[i]))
                throw std::invalid_argument(
                    fmt::format("non-finite gradient {} in {}[{}]", p.tensor.grad()[i], p.name, i));

    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor t = params_[k].tensor;
        auto value = t.values();
        auto grad = t.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            value[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
        t.zero_grad();
    }
}

double StepDecaySchedule::at(int epoch) const
{
    if (epoch <= hold)
        return base;
    const int decays = (epoch - hold - 1) / step + 1;
    return base * std::pow(factor, decays);
}

} // namespace mfuse::nn
