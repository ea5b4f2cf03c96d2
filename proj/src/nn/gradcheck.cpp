#include "mfuse/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::nn {

GradCheckReport gradient_check(const std::function<Tensor()>& forward, const ParamList& inputs, double step,
                               double floor, bool skip_kinks)
{
    zero_grads(inputs);
    forward().backward();
    std::vector<std::vector<double>> analytic;
    for (const auto& p : inputs) {
        if (!p.trainable)
            throw std::invalid_argument(fmt::format("gradient_check: {} is not trainable", p.name));
        analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
    }
    zero_grads(inputs);

    GradCheckReport report;
    NoGradGuard no_grad;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto values = inputs[k].values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            const auto central = [&](double h) {
                values[i] = saved + h;
                const double plus = forward().item();
                values[i] = saved - h;
                const double minus = forward().item();
                values[i] = saved;
                return (plus - minus) / (2.0 * h);
            };
            const double numeric = central(step);
            if (skip_kinks) {
                // Smooth functions agree to O(h^2) between the two steps; a kink
                // inside the wider step but not the narrower one does not.
                const double half = central(0.5 * step);
                const double gap = std::abs(numeric - half);
                if (gap > floor && gap > 1e-3 * (std::abs(numeric) + std::abs(half))) {
                    ++report.skipped;
                    continue;
                }
            }
            const double a = analytic[k][i];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor);
            ++report.checked;
            if (report.worst.empty() || rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = fmt::format("{}[{}]", inputs[k].name, i);
            }
        }
    }
    return report;
}

} // namespace mfuse::nn
