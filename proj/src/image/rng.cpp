#include "mfuse/rng.hpp"

#include <cmath>
#include <numbers>

namespace mfuse {

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : stage) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return mix64(root ^ mix64(h));
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index)
{
    return mix64(root ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

std::size_t CounterRng::below(std::size_t n)
{
    // Multiply-shift; bias is negligible for the small n used here.
    const auto wide = static_cast<unsigned __int128>(next()) * n;
    return static_cast<std::size_t>(wide >> 64);
}

double CounterRng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

} // namespace mfuse
