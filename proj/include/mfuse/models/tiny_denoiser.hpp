#pragma once

#include "mfuse/denoiser.hpp"
#include "mfuse/nn/layers.hpp"

#include <cstdint>
#include <vector>

namespace mfuse::models {

struct TinyDenoiserConfig {
    std::size_t depth = 7;  ///< conv layer count, >= 2
    std::size_t width = 24; ///< hidden channels
    std::size_t kernel = 3;
};

/// Residual CNN: conv(1->w)+relu, (depth-2) x [conv(w->w)+BN+relu], conv(w->1).
/// The network predicts the noise; the clean estimate is noisy - prediction.
class TinyDenoiser {
public:
    TinyDenoiser(TinyDenoiserConfig config, std::uint64_t seed);

    const TinyDenoiserConfig& config() const { return config_; }

    /// Last hidden activation, (B, width, H, W).
    nn::Tensor features(const nn::Tensor& noisy, nn::BatchNormMode mode);
    nn::Tensor predict_noise(const nn::Tensor& noisy, nn::BatchNormMode mode);
    /// noisy - predict_noise(noisy); unclipped.
    nn::Tensor forward(const nn::Tensor& noisy, nn::BatchNormMode mode);

    /// Eval-mode forward without tape recording; unclipped.
    nn::Tensor infer(const nn::Tensor& noisy) const;
    /// Eval-mode single image, clipped to [0, 1].
    ImageGray denoise(const ImageGray& noisy) const;

    nn::Conv2d& output_layer() { return output_; }
    nn::ParamList params();

private:
    template <class Bn>
    nn::Tensor run_trunk(const nn::Tensor& x, Bn&& bn) const;

    TinyDenoiserConfig config_;
    nn::Conv2d input_;
    std::vector<nn::Conv2d> hidden_;
    std::vector<nn::BatchNorm2d> norms_;
    nn::Conv2d output_;
};

/// Denoiser interface over a trained TinyDenoiser. Inference is read-only,
/// so concurrent calls are safe.
class TinyDenoiserAdapter final : public Denoiser {
public:
    explicit TinyDenoiserAdapter(const TinyDenoiser& model) : model_(model) {}
    ImageGray denoise(const ImageGray& noisy) const override { return model_.denoise(noisy); }
    std::string name() const override { return "tiny"; }

private:
    const TinyDenoiser& model_;
};

} // namespace mfuse::models
