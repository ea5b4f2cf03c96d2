#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mfuse {

/// Grayscale image with row-major intensities, nominally in [0, 1].
class ImageGray {
public:
    ImageGray() = default;
    ImageGray(std::size_t height, std::size_t width, double fill = 0.0);
    ImageGray(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
    double operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>&& take() && { return std::move(data_); }

    bool same_size(const ImageGray& other) const
    {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const ImageGray&, const ImageGray&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// AWGN standard deviation on the 8-bit scale, validated to [0, 55].
class NoiseLevel {
public:
    static constexpr double max_sigma = 55.0;

    explicit NoiseLevel(double sigma);

    double sigma() const { return sigma_; }
    double unit_sigma() const { return sigma_ / 255.0; }

private:
    double sigma_;
};

/// PSNR in dB; identical images produce the tagged infinite value.
class Psnr {
public:
    static Psnr finite(double db) { return Psnr(db, false); }
    static Psnr infinite() { return Psnr(0.0, true); }

    bool is_infinite() const { return infinite_; }
    /// Only meaningful when finite.
    double db() const { return db_; }

    /// "inf" or fixed six-decimal dB.
    std::string to_string() const;

    friend bool operator==(const Psnr&, const Psnr&) = default;
    friend std::partial_ordering operator<=>(const Psnr& a, const Psnr& b)
    {
        if (a.infinite_ || b.infinite_)
            return static_cast<int>(a.infinite_) <=> static_cast<int>(b.infinite_);
        return a.db_ <=> b.db_;
    }

private:
    Psnr(double db, bool infinite) : db_(db), infinite_(infinite) {}
    double db_;
    bool infinite_;
};

/// Mean of a PSNR list; infinite if any member is infinite.
Psnr mean_psnr(std::span<const Psnr> values);

struct PatchOrigin {
    std::size_t row;
    std::size_t col;
    friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

struct PatchGrid {
    std::size_t patch_size = 0;
    std::size_t stride = 0;
    std::vector<ImageGray> patches;
    std::vector<PatchOrigin> origins;
};

/// Clamp to [0, 1]. Throws std::invalid_argument naming the first non-finite pixel.
ImageGray clip_unit(const ImageGray& image);

/// image + N(0, (sigma/255)^2) per pixel, drawn from a counter-based stream
/// keyed by `seed`. The result is not clipped.
ImageGray add_awgn(const ImageGray& image, NoiseLevel sigma, std::uint64_t seed);

double mse(const ImageGray& reference, const ImageGray& test);

/// 10 log10(1 / MSE) on unit-scale values.
Psnr psnr(const ImageGray& reference, const ImageGray& test);

/// All fully contained patches at offsets 0, stride, 2*stride, ... (row-major).
PatchGrid extract_patches(const ImageGray& image, std::size_t patch_size, std::size_t stride);

/// Copy of the height x width window whose top-left corner is `origin`.
ImageGray crop(const ImageGray& image, PatchOrigin origin, std::size_t height, std::size_t width);

/// Per-pixel mean of |noisy - denoised| over matched pairs.
ImageGray removed_noise_heatmap(std::span<const ImageGray> noisy, std::span<const ImageGray> denoised);

} // namespace mfuse
