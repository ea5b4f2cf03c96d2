#pragma once

#include "mfuse/denoiser.hpp"

namespace mfuse::models {

/// Hard threshold on the orthonormal DCT: every non-DC coefficient with
/// |c| < 3 (sigma/255) sqrt(2 ln(H W)) is zeroed, then inverted and clipped.
ImageGray dct_threshold_denoise(const ImageGray& noisy, NoiseLevel sigma);

class DctThresholdDenoiser final : public Denoiser {
public:
    explicit DctThresholdDenoiser(NoiseLevel sigma) : sigma_(sigma) {}
    ImageGray denoise(const ImageGray& noisy) const override { return dct_threshold_denoise(noisy, sigma_); }
    std::string name() const override { return "dct"; }

private:
    NoiseLevel sigma_;
};

} // namespace mfuse::models
