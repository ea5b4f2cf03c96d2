#include "mfuse/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::nn {

ParamList trainable(const ParamList& params)
{
    ParamList out;
    std::copy_if(params.begin(), params.end(), std::back_inserter(out), [](const ParamEntry& e) { return e.trainable; });
    return out;
}

void glorot_uniform(Tensor& weight, std::size_t fan_in, std::size_t fan_out, CounterRng& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : weight.values())
        v = rng.uniform(-limit, limit);
}

Conv2d::Conv2d(std::size_t in, std::size_t out, std::size_t kernel, CounterRng& rng)
    : weight(Tensor::zeros(Shape{out, in, kernel, kernel}, true)), bias(Tensor::zeros(Shape{1, out, 1, 1}, true))
{
    if (kernel % 2 == 0)
        throw std::invalid_argument(fmt::format("conv kernel size {} must be odd", kernel));
    glorot_uniform(weight, in * kernel * kernel, out * kernel * kernel, rng);
}

void Conv2d::zero_init()
{
    std::fill(weight.values().begin(), weight.values().end(), 0.0);
    std::fill(bias.values().begin(), bias.values().end(), 0.0);
}

void Conv2d::append_params(ParamList& out, const std::string& prefix) const
{
    out.push_back({prefix + ".weight", LayerKind::conv2d, weight.shape(), true, weight, nullptr});
    out.push_back({prefix + ".bias", LayerKind::conv2d, bias.shape(), true, bias, nullptr});
}

BatchNorm2d::BatchNorm2d(std::size_t channels)
    : gamma(Tensor::filled(Shape{1, channels, 1, 1}, 1.0, true)),
      beta(Tensor::zeros(Shape{1, channels, 1, 1}, true)),
      running_mean(channels, 0.0),
      running_var(channels, 1.0)
{
}

Tensor BatchNorm2d::operator()(const Tensor& x, BatchNormMode mode)
{
    if (mode == BatchNormMode::eval)
        return infer(x);
    if (mode == BatchNormMode::train_keep_stats)
        return batch_norm(x, gamma, beta, running_mean, running_var, true, eps);
    BatchMoments moments;
    Tensor out = batch_norm(x, gamma, beta, running_mean, running_var, true, eps, &moments);
    for (std::size_t c = 0; c < running_mean.size(); ++c) {
        running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * moments.mean[c];
        running_var[c] = (1.0 - momentum) * running_var[c] + momentum * moments.unbiased_var[c];
    }
    return out;
}

Tensor BatchNorm2d::infer(const Tensor& x) const
{
    return batch_norm(x, gamma, beta, running_mean, running_var, false, eps);
}

void BatchNorm2d::append_params(ParamList& out, const std::string& prefix)
{
    const Shape s = gamma.shape();
    out.push_back({prefix + ".gamma", LayerKind::batchnorm2d, s, true, gamma, nullptr});
    out.push_back({prefix + ".beta", LayerKind::batchnorm2d, s, true, beta, nullptr});
    out.push_back({prefix + ".running_mean", LayerKind::batchnorm2d, s, false, {}, &running_mean});
    out.push_back({prefix + ".running_var", LayerKind::batchnorm2d, s, false, {}, &running_var});
}

Dense::Dense(std::size_t in, std::size_t out, CounterRng& rng)
    : weight(Tensor::zeros(Shape{out, in, 1, 1}, true)), bias(Tensor::zeros(Shape{1, out, 1, 1}, true))
{
    glorot_uniform(weight, in, out, rng);
}

void Dense::zero_init()
{
    std::fill(weight.values().begin(), weight.values().end(), 0.0);
    std::fill(bias.values().begin(), bias.values().end(), 0.0);
}

void Dense::append_params(ParamList& out, const std::string& prefix) const
{
    out.push_back({prefix + ".weight", LayerKind::dense, weight.shape(), true, weight, nullptr});
    out.push_back({prefix + ".bias", LayerKind::dense, bias.shape(), true, bias, nullptr});
}

void copy_values(const ParamList& src, const ParamList& dst)
{
    if (src.size() != dst.size())
        throw std::invalid_argument(fmt::format("parameter lists differ in length ({} vs {})", src.size(), dst.size()));
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i].name != dst[i].name || src[i].shape != dst[i].shape)
            throw std::invalid_argument(fmt::format("parameter mismatch: {} {} vs {} {}", src[i].name,
                                                    src[i].shape.str(), dst[i].name, dst[i].shape.str()));
        auto s = src[i].values();
        std::copy(s.begin(), s.end(), dst[i].values().begin());
    }
}

void zero_grads(const ParamList& params)
{
    for (const auto& p : params)
        if (p.trainable) {
            Tensor t = p.tensor;
            t.zero_grad();
        }
}

} // namespace mfuse::nn
