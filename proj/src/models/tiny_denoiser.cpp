#include "mfuse/models/tiny_denoiser.hpp"

#include "mfuse/models/tensor_io.hpp"

#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::models {

TinyDenoiser::TinyDenoiser(TinyDenoiserConfig config, std::uint64_t seed) : config_(config)
{
    if (config.depth < 2 || config.width == 0)
        throw std::invalid_argument(
            fmt::format("tiny denoiser needs depth >= 2 and width >= 1 (got {}, {})", config.depth, config.width));
    CounterRng rng(derive_seed(seed, "tiny_denoiser.init"));
    input_ = nn::Conv2d(1, config.width, config.kernel, rng);
    for (std::size_t i = 0; i + 2 < config.depth; ++i) {
        hidden_.emplace_back(config.width, config.width, config.kernel, rng);
        norms_.emplace_back(config.width);
    }
    output_ = nn::Conv2d(config.width, 1, config.kernel, rng);
}

template <class Bn>
nn::Tensor TinyDenoiser::run_trunk(const nn::Tensor& x, Bn&& bn) const
{
    if (x.shape().c != 1)
        throw std::invalid_argument(fmt::format("tiny denoiser expects 1 channel, got {}", x.shape().str()));
    nn::Tensor h = nn::relu(input_(x));
    for (std::size_t i = 0; i < hidden_.size(); ++i)
        h = nn::relu(bn(i, hidden_[i](h)));
    return h;
}

nn::Tensor TinyDenoiser::features(const nn::Tensor& noisy, nn::BatchNormMode mode)
{
    return run_trunk(noisy, [&](std::size_t i, const nn::Tensor& t) { return norms_[i](t, mode); });
}

nn::Tensor TinyDenoiser::predict_noise(const nn::Tensor& noisy, nn::BatchNormMode mode)
{
    return output_(features(noisy, mode));
}

nn::Tensor TinyDenoiser::forward(const nn::Tensor& noisy, nn::BatchNormMode mode)
{
    return nn::sub(noisy, predict_noise(noisy, mode));
}

nn::Tensor TinyDenoiser::infer(const nn::Tensor& noisy) const
{
    nn::NoGradGuard no_grad;
    const nn::Tensor h = run_trunk(noisy, [&](std::size_t i, const nn::Tensor& t) { return norms_[i].infer(t); });
    return nn::sub(noisy, output_(h));
}

ImageGray TinyDenoiser::denoise(const ImageGray& noisy) const
{
    const nn::Tensor out = infer(image_to_tensor(noisy));
    return clip_unit(tensor_to_images(out).front());
}

nn::ParamList TinyDenoiser::params()
{
    nn::ParamList out;
    input_.append_params(out, "input");
    for (std::size_t i = 0; i < hidden_.size(); ++i) {
        hidden_[i].append_params(out, fmt::format("hidden{}", i));
        norms_[i].append_params(out, fmt::format("hidden{}.bn", i));
    }
    output_.append_params(out, "output");
    return out;
}

} // namespace mfuse::models
