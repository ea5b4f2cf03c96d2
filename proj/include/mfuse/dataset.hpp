#pragma once

#include "mfuse/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfuse {

struct NamedImage {
    std::string name; ///< file stem
    ImageGray image;
};

/// Every *.pgm in `dir`, sorted by file name.
std::vector<NamedImage> load_pgm_dir(const std::filesystem::path& dir);

/// Synthetic grayscale images, quantized to 8 bits. Image i has kind i % 6:
/// linear gradient, checkerboard, smoothed noise texture, sinusoidal grating
/// or rings, random rectangles and disks, and a mixture of these.
std::vector<ImageGray> generate_toy_images(std::size_t count, std::size_t size, std::uint64_t seed);

/// "toy_00" .. for generate_toy_images output.
std::string toy_image_name(std::size_t index);

} // namespace mfuse
