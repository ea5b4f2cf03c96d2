#pragma once

#include "mfuse/freq/dct.hpp"
#include "mfuse/freq/mask_spec.hpp"
#include "mfuse/image.hpp"
#include "mfuse/manip/mode.hpp"

#include <cstdint>
#include <vector>

namespace mfuse::freq {

/// Largest index distance on an H x W coefficient grid.
double radius_max(std::size_t height, std::size_t width);

/// Binary keep-mask over DCT indices: 0 = removed, 1 = kept.
struct FrequencyMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> keep;

    bool kept(std::size_t u, std::size_t v) const { return keep[u * width + v] != 0; }
    std::size_t masked_count() const;
};

FrequencyMask radial_mask(std::size_t height, std::size_t width, const FrequencyMaskSpec& spec);

/// idct2(mask * dct2(image)), clipped to [0, 1].
ImageGray apply_frequency_mask(const ImageGray& image, const FrequencyMaskSpec& spec);

/// Frequency modes 8..12 only.
ImageGray apply_frequency_mode(const ImageGray& image, const manip::ManipulationMode& mode);

} // namespace mfuse::freq
