#pragma once

#include "mfuse/image.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace mfuse::freq {

/// Radially averaged power spectrum. Radii are bin centres in cycles/pixel.
struct PsdCurve {
    std::vector<double> radii;
    std::vector<double> power_db;
};

inline constexpr double psd_floor = 1e-12;

/// Centred DFT power |F|^2 / (H W) per image, binned by normalized radial
/// frequency over [0, 0.5] into `n_bins` equal-width bins, averaged over all
/// images, reported as 10 log10(mean + 1e-12). Frequencies beyond 0.5
/// (the spectrum corners) are excluded; empty bins are dropped.
PsdCurve psd(std::span<const ImageGray> images, std::size_t n_bins);

/// CSV with header `radius,power_db`.
void write_psd_csv(std::ostream& out, const PsdCurve& curve);

} // namespace mfuse::freq
