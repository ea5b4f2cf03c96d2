#include "mfuse/freq/dct.hpp"

#include <cmath>
#include <numbers>

namespace mfuse::freq {
namespace {

// basis[k * n + i] = alpha(k) cos(pi (2i + 1) k / 2n)
std::vector<double> dct_basis(std::size_t n)
{
    std::vector<double> basis(n * n);
    const double a0 = std::sqrt(1.0 / static_cast<double>(n));
    const double ak = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            basis[k * n + i] = (k == 0 ? a0 : ak) *
                std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) /
                         (2.0 * static_cast<double>(n)));
    return basis;
}

// Applies `basis` (or its transpose) along rows, then along columns.
std::vector<double> separable(const std::vector<double>& src, std::size_t h, std::size_t w, bool inverse)
{
    const auto bh = dct_basis(h);
    const auto bw = dct_basis(w);
    std::vector<double> tmp(h * w, 0.0);
    std::vector<double> dst(h * w, 0.0);
    // Along each row (width axis).
    for (std::size_t r = 0; r < h; ++r) {
        const double* in = &src[r * w];
        double* out = &tmp[r * w];
        for (std::size_t k = 0; k < w; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < w; ++i)
                acc += (inverse ? bw[i * w + k] : bw[k * w + i]) * in[i];
            out[k] = acc;
        }
    }
    // Along each column (height axis).
    for (std::size_t k = 0; k < h; ++k) {
        double* out = &dst[k * w];
        for (std::size_t i = 0; i < h; ++i) {
            const double b = inverse ? bh[i * h + k] : bh[k * h + i];
            const double* in = &tmp[i * w];
            for (std::size_t c = 0; c < w; ++c)
                out[c] += b * in[c];
        }
    }
    return dst;
}

} // namespace

DctCoeffs dct2(const ImageGray& image)
{
    DctCoeffs out;
    out.height = image.height();
    out.width = image.width();
    out.coeffs = separable({image.data().begin(), image.data().end()}, out.height, out.width, false);
    return out;
}

ImageGray idct2(const DctCoeffs& coeffs)
{
    return ImageGray(coeffs.height, coeffs.width, separable(coeffs.coeffs, coeffs.height, coeffs.width, true));
}

} // namespace mfuse::freq
