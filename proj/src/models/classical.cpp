#include "mfuse/models/classical.hpp"

#include "mfuse/freq/dct.hpp"

#include <cmath>

namespace mfuse::models {

ImageGray dct_threshold_denoise(const ImageGray& noisy, NoiseLevel sigma)
{
    freq::DctCoeffs coeffs = freq::dct2(noisy);
    const double n = static_cast<double>(noisy.size());
    const double threshold = n > 1.0 ? 3.0 * sigma.unit_sigma() * std::sqrt(2.0 * std::log(n)) : 0.0;
    for (std::size_t i = 1; i < coeffs.coeffs.size(); ++i)
        if (std::abs(coeffs.coeffs[i]) < threshold)
            coeffs.coeffs[i] = 0.0;
    return clip_unit(freq::idct2(coeffs));
}

} // namespace mfuse::models
