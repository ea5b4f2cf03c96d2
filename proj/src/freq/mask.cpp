#include "mfuse/freq/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::freq {

void FrequencyMaskSpec::validate() const
{
    if (!(inner_frac >= 0.0) || std::isnan(outer_frac) || !(inner_frac < outer_frac))
        throw std::invalid_argument(
            fmt::format("invalid frequency mask: inner {} must be >= 0 and < outer {}", inner_frac, outer_frac));
}

double radius_max(std::size_t height, std::size_t width)
{
    const double h = height > 0 ? static_cast<double>(height - 1) : 0.0;
    const double w = width > 0 ? static_cast<double>(width - 1) : 0.0;
    return std::sqrt(h * h + w * w);
}

std::size_t FrequencyMask::masked_count() const
{
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{0}));
}

FrequencyMask radial_mask(std::size_t height, std::size_t width, const FrequencyMaskSpec& spec)
{
    spec.validate();
    const double rmax = radius_max(height, width);
    const double inner = spec.inner_frac * rmax;
    const double outer = spec.outer_frac == FrequencyMaskSpec::unbounded ? FrequencyMaskSpec::unbounded
                                                                          : spec.outer_frac * rmax;
    FrequencyMask mask{height, width, std::vector<std::uint8_t>(height * width, 1)};
    for (std::size_t u = 0; u < height; ++u) {
        for (std::size_t v = 0; v < width; ++v) {
            const double d = std::sqrt(static_cast<double>(u * u + v * v));
            if (inner <= d && d < outer)
                mask.keep[u * width + v] = 0;
        }
    }
    return mask;
}

ImageGray apply_frequency_mask(const ImageGray& image, const FrequencyMaskSpec& spec)
{
    const FrequencyMask mask = radial_mask(image.height(), image.width(), spec);
    DctCoeffs coeffs = dct2(image);
    for (std::size_t i = 0; i < coeffs.coeffs.size(); ++i)
        if (mask.keep[i] == 0)
            coeffs.coeffs[i] = 0.0;
    return clip_unit(idct2(coeffs));
}

ImageGray apply_frequency_mode(const ImageGray& image, const manip::ManipulationMode& mode)
{
    return apply_frequency_mask(image, mode.mask());
}

} // namespace mfuse::freq
