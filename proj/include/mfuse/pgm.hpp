#pragma once

#include "mfuse/image.hpp"

#include <filesystem>
#include <iosfwd>

namespace mfuse {

/// Binary 8-bit PGM (P5, maxval 255). Pixel value v maps to v / 255.
ImageGray read_pgm(std::istream& in);
ImageGray read_pgm(const std::filesystem::path& path);

/// Values are clamped to [0, 1] and rounded to the nearest of 256 levels.
void write_pgm(std::ostream& out, const ImageGray& image);
void write_pgm(const std::filesystem::path& path, const ImageGray& image);

/// Round-trip through the 8-bit representation.
ImageGray quantize_8bit(const ImageGray& image);

} // namespace mfuse
