#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mfuse {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Sub-seed for a named stage: FNV-1a of the name folded into the root.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Counter-based generator: draw i is mix64(key + (i + 1) * golden).
/// Any draw can be recomputed from (key, i) alone, so streams keyed by
/// (seed, item index) are independent of evaluation order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next()
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);
    /// Standard normal (Box-Muller, both outputs used).
    double normal();

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mfuse
