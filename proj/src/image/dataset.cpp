#include "mfuse/dataset.hpp"

#include "mfuse/pgm.hpp"
#include "mfuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <stdexcept>

namespace mfuse {

std::vector<NamedImage> load_pgm_dir(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error(fmt::format("image directory {} does not exist", dir.string()));
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<NamedImage> out;
    for (const auto& f : files) {
        try {
            out.push_back({f.stem().string(), read_pgm(f)});
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("{}: {}", f.string(), e.what()));
        }
    }
    return out;
}

namespace {

using Pixels = std::vector<double>;

Pixels gradient(std::size_t n, CounterRng& rng)
{
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double lo = rng.uniform(0.05, 0.35);
    const double hi = rng.uniform(0.65, 0.95);
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    Pixels px(n * n);
    const double c = (static_cast<double>(n) - 1.0) / 2.0;
    const double span = c * (std::abs(dx) + std::abs(dy)) + 1e-9;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t col = 0; col < n; ++col) {
            const double t = ((static_cast<double>(col) - c) * dx + (static_cast<double>(r) - c) * dy) / span;
            px[r * n + col] = lo + (hi - lo) * 0.5 * (t + 1.0);
        }
    return px;
}

Pixels checkerboard(std::size_t n, CounterRng& rng)
{
    const std::size_t block = 6 + rng.below(11);
    const std::size_t off_r = rng.below(block);
    const std::size_t off_c = rng.below(block);
    const double a = rng.uniform(0.1, 0.4);
    const double b = rng.uniform(0.6, 0.9);
    Pixels px(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            px[r * n + c] = (((r + off_r) / block + (c + off_c) / block) % 2 == 0) ? a : b;
    return px;
}

// Separable box blur, repeated three times (close to Gaussian).
Pixels blur(Pixels px, std::size_t n, std::size_t radius)
{
    Pixels tmp(px.size());
    for (int pass = 0; pass < 3; ++pass) {
        for (int axis = 0; axis < 2; ++axis) {
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) {
                    double sum = 0.0;
                    int cnt = 0;
                    for (long d = -static_cast<long>(radius); d <= static_cast<long>(radius); ++d) {
                        const long rr = axis == 0 ? static_cast<long>(r) : static_cast<long>(r) + d;
                        const long cc = axis == 0 ? static_cast<long>(c) + d : static_cast<long>(c);
                        if (rr < 0 || cc < 0 || rr >= static_cast<long>(n) || cc >= static_cast<long>(n))
                            continue;
                        sum += px[static_cast<std::size_t>(rr) * n + static_cast<std::size_t>(cc)];
                        ++cnt;
                    }
                    tmp[r * n + c] = sum / cnt;
                }
            std::swap(px, tmp);
        }
    }
    return px;
}

void rescale(Pixels& px, double lo, double hi)
{
    const auto [mn, mx] = std::minmax_element(px.begin(), px.end());
    const double a = *mn;
    const double range = std::max(*mx - a, 1e-12);
    for (double& v : px)
        v = lo + (hi - lo) * (v - a) / range;
}

Pixels texture(std::size_t n, CounterRng& rng)
{
    Pixels px(n * n);
    for (double& v : px)
        v = rng.normal();
    px = blur(std::move(px), n, 1 + rng.below(3));
    rescale(px, rng.uniform(0.05, 0.25), rng.uniform(0.75, 0.95));
    return px;
}

Pixels waves(std::size_t n, CounterRng& rng)
{
    const bool rings = rng.below(2) == 1;
    const double freq = rng.uniform(0.05, 0.2);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double cr = rng.uniform(0.3, 0.7) * static_cast<double>(n);
    const double cc = rng.uniform(0.3, 0.7) * static_cast<double>(n);
    Pixels px(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const double x = static_cast<double>(c);
            const double y = static_cast<double>(r);
            const double t = rings ? std::hypot(x - cc, y - cr) : x * std::cos(angle) + y * std::sin(angle);
            px[r * n + c] = 0.5 + 0.35 * std::sin(2.0 * std::numbers::pi * freq * t + phase);
        }
    return px;
}

Pixels shapes(std::size_t n, CounterRng& rng)
{
    Pixels px(n * n, rng.uniform(0.1, 0.9));
    const std::size_t count = 4 + rng.below(5);
    const double nd = static_cast<double>(n);
    for (std::size_t s = 0; s < count; ++s) {
        const double level = rng.uniform(0.05, 0.95);
        const double cr = rng.uniform(0.0, nd);
        const double cc = rng.uniform(0.0, nd);
        const double half_h = rng.uniform(0.05, 0.25) * nd;
        const double half_w = rng.uniform(0.05, 0.25) * nd;
        const bool disk = rng.below(2) == 1;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double dr = (static_cast<double>(r) - cr) / half_h;
                const double dc = (static_cast<double>(c) - cc) / half_w;
                const bool inside = disk ? dr * dr + dc * dc <= 1.0 : std::abs(dr) <= 1.0 && std::abs(dc) <= 1.0;
                if (inside)
                    px[r * n + c] = level;
            }
    }
    return px;
}

Pixels mixture(std::size_t n, CounterRng& rng)
{
    const Pixels g = gradient(n, rng);
    const Pixels t = texture(n, rng);
    const Pixels s = shapes(n, rng);
    Pixels px(n * n);
    for (std::size_t i = 0; i < px.size(); ++i)
        px[i] = 0.4 * g[i] + 0.3 * t[i] + 0.3 * s[i];
    return px;
}

} // namespace

std::vector<ImageGray> generate_toy_images(std::size_t count, std::size_t size, std::uint64_t seed)
{
    if (size == 0)
        throw std::invalid_argument("toy image size must be >= 1");
    std::vector<ImageGray> out;
    out.reserve(count);
    const std::uint64_t base = derive_seed(seed, "toy");
    for (std::size_t i = 0; i < count; ++i) {
        CounterRng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
        Pixels px;
        switch (i % 6) {
        case 0: px = gradient(size, rng); break;
        case 1: px = checkerboard(size, rng); break;
        case 2: px = texture(size, rng); break;
        case 3: px = waves(size, rng); break;
        case 4: px = shapes(size, rng); break;
        default: px = mixture(size, rng); break;
        }
        out.push_back(quantize_8bit(clip_unit(ImageGray(size, size, std::move(px)))));
    }
    return out;
}

std::string toy_image_name(std::size_t index)
{
    return fmt::format("toy_{:02d}", index);
}

} // namespace mfuse
