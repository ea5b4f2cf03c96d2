#include "mfuse/image.hpp"

#include "mfuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse {

ImageGray::ImageGray(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill)
{
}

ImageGray::ImageGray(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data))
{
    if (data_.size() != height_ * width_)
        throw std::invalid_argument(fmt::format("image data has {} values, expected {}x{}={}", data_.size(),
                                                height_, width_, height_ * width_));
}

NoiseLevel::NoiseLevel(double sigma) : sigma_(sigma)
{
    if (!(sigma >= 0.0 && sigma <= max_sigma))
        throw std::invalid_argument(fmt::format("noise level {} outside [0, {}]", sigma, max_sigma));
}

std::string Psnr::to_string() const
{
    return infinite_ ? std::string("inf") : fmt::format("{:.6f}", db_);
}

Psnr mean_psnr(std::span<const Psnr> values)
{
    if (values.empty())
        throw std::invalid_argument("mean of an empty PSNR list");
    double sum = 0.0;
    for (const Psnr& p : values) {
        if (p.is_infinite())
            return Psnr::infinite();
        sum += p.db();
    }
    return Psnr::finite(sum / static_cast<double>(values.size()));
}

ImageGray clip_unit(const ImageGray& image)
{
    ImageGray out(image.height(), image.width());
    auto src = image.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (!std::isfinite(src[i]))
            throw std::invalid_argument(fmt::format("non-finite value {} at pixel (row {}, col {})", src[i],
                                                    i / image.width(), i % image.width()));
        dst[i] = std::clamp(src[i], 0.0, 1.0);
    }
    return out;
}

ImageGray add_awgn(const ImageGray& image, NoiseLevel sigma, std::uint64_t seed)
{
    ImageGray out = image;
    if (sigma.sigma() == 0.0)
        return out;
    CounterRng rng(seed);
    const double s = sigma.unit_sigma();
    for (double& v : out.data())
        v += s * rng.normal();
    return out;
}

double mse(const ImageGray& reference, const ImageGray& test)
{
    if (!reference.same_size(test))
        throw std::invalid_argument(fmt::format("size mismatch: {}x{} vs {}x{}", reference.height(),
                                                reference.width(), test.height(), test.width()));
    if (reference.empty())
        throw std::invalid_argument("MSE of empty images");
    auto a = reference.data();
    auto b = test.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

Psnr psnr(const ImageGray& reference, const ImageGray& test)
{
    const double err = mse(reference, test);
    if (err == 0.0)
        return Psnr::infinite();
    return Psnr::finite(10.0 * std::log10(1.0 / err));
}

ImageGray crop(const ImageGray& image, PatchOrigin origin, std::size_t height, std::size_t width)
{
    if (origin.row + height > image.height() || origin.col + width > image.width())
        throw std::invalid_argument(fmt::format("crop {}x{} at ({}, {}) exceeds {}x{} image", height, width,
                                                origin.row, origin.col, image.height(), image.width()));
    ImageGray out(height, width);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            out(r, c) = image(origin.row + r, origin.col + c);
    return out;
}

PatchGrid extract_patches(const ImageGray& image, std::size_t patch_size, std::size_t stride)
{
    if (patch_size == 0 || stride == 0)
        throw std::invalid_argument("patch size and stride must be positive");
    if (patch_size > image.height() || patch_size > image.width())
        throw std::invalid_argument(fmt::format("patch size {} exceeds {}x{} image", patch_size, image.height(),
                                                image.width()));
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.stride = stride;
    for (std::size_t r = 0; r + patch_size <= image.height(); r += stride) {
        for (std::size_t c = 0; c + patch_size <= image.width(); c += stride) {
            grid.origins.push_back({r, c});
            grid.patches.push_back(crop(image, {r, c}, patch_size, patch_size));
        }
    }
    return grid;
}

ImageGray removed_noise_heatmap(std::span<const ImageGray> noisy, std::span<const ImageGray> denoised)
{
    if (noisy.empty())
        throw std::invalid_argument("heat map needs at least one image pair");
    if (noisy.size() != denoised.size())
        throw std::invalid_argument(fmt::format("{} noisy images but {} denoised", noisy.size(), denoised.size()));
    ImageGray acc(noisy.front().height(), noisy.front().width());
    for (std::size_t k = 0; k < noisy.size(); ++k) {
        if (!noisy[k].same_size(acc) || !denoised[k].same_size(acc))
            throw std::invalid_argument(fmt::format("image pair {} does not match the {}x{} map size", k,
                                                    acc.height(), acc.width()));
        auto a = noisy[k].data();
        auto b = denoised[k].data();
        auto out = acc.data();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += std::abs(a[i] - b[i]);
    }
    const double inv = 1.0 / static_cast<double>(noisy.size());
    for (double& v : acc.data())
        v *= inv;
    return acc;
}

} // namespace mfuse
