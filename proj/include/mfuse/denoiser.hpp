#pragma once

#include "mfuse/image.hpp"

#include <functional>
#include <string>

namespace mfuse {

/// Pluggable image denoiser. Implementations must preserve dimensions and
/// return values in [0, 1].
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual ImageGray denoise(const ImageGray& noisy) const = 0;
    virtual std::string name() const = 0;

    /// True when `denoise` may be called concurrently from several threads.
    virtual bool parallel_safe() const { return true; }
};

/// Returns clip(noisy).
class IdentityDenoiser final : public Denoiser {
public:
    ImageGray denoise(const ImageGray& noisy) const override { return clip_unit(noisy); }
    std::string name() const override { return "identity"; }
};

/// Applies a scalar map to every pixel, then clips. Equivariant under any
/// pixel permutation.
class PointwiseDenoiser final : public Denoiser {
public:
    explicit PointwiseDenoiser(std::function<double(double)> fn) : fn_(std::move(fn)) {}
    ImageGray denoise(const ImageGray& noisy) const override;
    std::string name() const override { return "pointwise"; }

private:
    std::function<double(double)> fn_;
};

} // namespace mfuse
