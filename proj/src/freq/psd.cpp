#include "mfuse/freq/psd.hpp"

#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace mfuse::freq {
namespace {

using cplx = std::complex<double>;

std::vector<cplx> twiddles(std::size_t n)
{
    std::vector<cplx> tw(n);
    for (std::size_t k = 0; k < n; ++k)
        tw[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    return tw;
}

// |DFT|^2 of one image via two separable passes.
std::vector<double> dft_power(const ImageGray& image, const std::vector<cplx>& tw_h, const std::vector<cplx>& tw_w)
{
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    std::vector<cplx> rows(h * w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t k = 0; k < w; ++k) {
            cplx acc = 0.0;
            for (std::size_t c = 0; c < w; ++c)
                acc += image(r, c) * tw_w[(k * c) % w];
            rows[r * w + k] = acc;
        }
    std::vector<double> power(h * w);
    const double norm = 1.0 / static_cast<double>(h * w);
    for (std::size_t u = 0; u < h; ++u)
        for (std::size_t k = 0; k < w; ++k) {
            cplx acc = 0.0;
            for (std::size_t r = 0; r < h; ++r)
                acc += rows[r * w + k] * tw_h[(u * r) % h];
            power[u * w + k] = std::norm(acc) * norm;
        }
    return power;
}

// Signed frequency in cycles/pixel of DFT index k on an n-point axis.
double signed_freq(std::size_t k, std::size_t n)
{
    const auto ki = static_cast<double>(k);
    const auto ni = static_cast<double>(n);
    return (2 * k >= n ? ki - ni : ki) / ni;
}

} // namespace

PsdCurve psd(std::span<const ImageGray> images, std::size_t n_bins)
{
    if (images.empty())
        throw std::invalid_argument("PSD needs at least one image");
    if (n_bins == 0)
        throw std::invalid_argument("PSD needs at least one bin");
    const std::size_t h = images.front().height();
    const std::size_t w = images.front().width();
    for (const auto& img : images)
        if (img.height() != h || img.width() != w)
            throw std::invalid_argument(fmt::format("PSD images must share one size ({}x{} vs {}x{})", img.height(),
                                                    img.width(), h, w));

    const double bin_width = 0.5 / static_cast<double>(n_bins);
    std::vector<int> bin_of(h * w, -1);
    std::vector<std::size_t> counts(n_bins, 0);
    for (std::size_t u = 0; u < h; ++u)
        for (std::size_t v = 0; v < w; ++v) {
            const double fu = signed_freq(u, h);
            const double fv = signed_freq(v, w);
            const double r = std::sqrt(fu * fu + fv * fv);
            if (r > 0.5)
                continue;
            const auto b = std::min(n_bins - 1, static_cast<std::size_t>(r / bin_width));
            bin_of[u * w + v] = static_cast<int>(b);
            ++counts[b];
        }

    const auto tw_h = twiddles(h);
    const auto tw_w = twiddles(w);
    std::vector<double> sums(n_bins, 0.0);
    for (const auto& img : images) {
        const auto power = dft_power(img, tw_h, tw_w);
        for (std::size_t i = 0; i < power.size(); ++i)
            if (bin_of[i] >= 0)
                sums[static_cast<std::size_t>(bin_of[i])] += power[i];
    }

    PsdCurve curve;
    const auto n_images = static_cast<double>(images.size());
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (counts[b] == 0)
            continue;
        const double mean = sums[b] / (static_cast<double>(counts[b]) * n_images);
        curve.radii.push_back((static_cast<double>(b) + 0.5) * bin_width);
        curve.power_db.push_back(10.0 * std::log10(mean + psd_floor));
    }
    return curve;
}

void write_psd_csv(std::ostream& out, const PsdCurve& curve)
{
    out << "radius,power_db\n";
    for (std::size_t i = 0; i < curve.radii.size(); ++i)
        out << fmt::format("{:.6f},{:.6f}\n", curve.radii[i], curve.power_db[i]);
}

} // namespace mfuse::freq
