#pragma once

#include "mfuse/image.hpp"

#include <cstddef>
#include <vector>

namespace mfuse::freq {

/// Orthonormal DCT-II coefficients, row-major, index (u, v) = (row freq, col freq).
struct DctCoeffs {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> coeffs;

    double& operator()(std::size_t u, std::size_t v) { return coeffs[u * width + v]; }
    double operator()(std::size_t u, std::size_t v) const { return coeffs[u * width + v]; }
};

/// Separable orthonormal DCT-II (rows, then columns). Direct O(N^2) per axis.
DctCoeffs dct2(const ImageGray& image);

/// Exact inverse of dct2 (DCT-III). The result is not clipped.
ImageGray idct2(const DctCoeffs& coeffs);

} // namespace mfuse::freq
