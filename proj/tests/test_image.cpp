#include "mfuse/dataset.hpp"
#include "mfuse/image.hpp"
#include "mfuse/pgm.hpp"
#include "mfuse/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

using namespace mfuse;

TEST(ClipUnit, ClampsEndpointsAndKeepsInRange)
{
    ImageGray img(1, 4, std::vector<double>{1.3, -0.2, 0.5, 1.0});
    const ImageGray out = clip_unit(img);
    EXPECT_EQ(out(0, 0), 1.0);
    EXPECT_EQ(out(0, 1), 0.0);
    EXPECT_EQ(out(0, 2), 0.5);
    EXPECT_EQ(out(0, 3), 1.0);

    const ImageGray flat(3, 3, 0.5);
    EXPECT_EQ(clip_unit(flat), flat);
}

TEST(ClipUnit, RejectsNonFiniteNamingPixel)
{
    ImageGray img(2, 3, 0.1);
    img(1, 2) = std::numeric_limits<double>::quiet_NaN();
    try {
        clip_unit(img);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find('1'), std::string::npos);
        EXPECT_NE(msg.find('2'), std::string::npos);
    }
}

TEST(NoiseLevel, ValidatesRange)
{
    EXPECT_NO_THROW(NoiseLevel(0.0));
    EXPECT_NO_THROW(NoiseLevel(55.0));
    EXPECT_THROW(NoiseLevel(55.5), std::invalid_argument);
    EXPECT_THROW(NoiseLevel(-1.0), std::invalid_argument);
    EXPECT_DOUBLE_EQ(NoiseLevel(25.5).unit_sigma(), 0.1);
}

TEST(Awgn, ZeroSigmaIsExactCopy)
{
    ImageGray img(4, 5);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = 0.05 * static_cast<double>(i % 17);
    EXPECT_EQ(add_awgn(img, NoiseLevel(0.0), 7), img);
}

TEST(Awgn, DeterministicPerSeed)
{
    const ImageGray img(16, 16, 0.5);
    EXPECT_EQ(add_awgn(img, NoiseLevel(25), 11), add_awgn(img, NoiseLevel(25), 11));
    EXPECT_NE(add_awgn(img, NoiseLevel(25), 11), add_awgn(img, NoiseLevel(25), 12));
}

TEST(Awgn, SampleStdMatchesSigma)
{
    const ImageGray img(256, 256, 0.5);
    const ImageGray noisy = add_awgn(img, NoiseLevel(25), 2024);
    double mean = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
        mean += noisy.data()[i] - 0.5;
    mean /= static_cast<double>(img.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double d = noisy.data()[i] - 0.5 - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(img.size() - 1));
    EXPECT_NEAR(sd, 25.0 / 255.0, 0.02 * 25.0 / 255.0);
    EXPECT_NEAR(mean, 0.0, 0.002);
}

TEST(Awgn, NotClipped)
{
    const ImageGray img(64, 64, 0.0);
    const ImageGray noisy = add_awgn(img, NoiseLevel(50), 3);
    const auto [mn, mx] = std::minmax_element(noisy.data().begin(), noisy.data().end());
    EXPECT_LT(*mn, 0.0);
    EXPECT_GT(*mx, 0.0);
}

TEST(Psnr, ClosedForms)
{
    const ImageGray zero(4, 4, 0.0);
    EXPECT_TRUE(psnr(zero, zero).is_infinite());
    EXPECT_EQ(psnr(zero, zero).to_string(), "inf");
    EXPECT_NEAR(psnr(zero, ImageGray(4, 4, 0.1)).db(), 10.0 * std::log10(1.0 / 0.01), 1e-9);
    EXPECT_NEAR(psnr(zero, ImageGray(4, 4, 0.5)).db(), 10.0 * std::log10(4.0), 1e-9);
    EXPECT_THROW(psnr(zero, ImageGray(4, 5, 0.0)), std::invalid_argument);
}

TEST(Psnr, OrderingAndMean)
{
    const std::vector<Psnr> finite{Psnr::finite(20.0), Psnr::finite(30.0)};
    EXPECT_DOUBLE_EQ(mean_psnr(finite).db(), 25.0);
    const std::vector<Psnr> with_inf{Psnr::finite(20.0), Psnr::infinite()};
    EXPECT_TRUE(mean_psnr(with_inf).is_infinite());
    EXPECT_LT(Psnr::finite(1e6), Psnr::infinite());
    EXPECT_GT(Psnr::finite(31.0), Psnr::finite(30.0));
    EXPECT_EQ(Psnr::finite(20.0).to_string(), "20.000000");
}

TEST(Patches, ExactTiling)
{
    const PatchGrid grid = extract_patches(ImageGray(100, 100), 50, 50);
    ASSERT_EQ(grid.patches.size(), 4u);
    const std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 0}, {0, 50}, {50, 0}, {50, 50}};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(grid.origins[i].row, expected[i].first);
        EXPECT_EQ(grid.origins[i].col, expected[i].second);
    }
}

TEST(Patches, CountsAndBorders)
{
    EXPECT_EQ(extract_patches(ImageGray(64, 64), 64, 32).patches.size(), 1u);
    // Offsets 0 and 32 per axis.
    EXPECT_EQ(extract_patches(ImageGray(96, 96), 64, 32).patches.size(), 4u);
    EXPECT_THROW(extract_patches(ImageGray(40, 80), 50, 10), std::invalid_argument);
}

TEST(Patches, ContentMatchesSource)
{
    ImageGray img(7, 9);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<double>(i) / 100.0;
    const PatchGrid grid = extract_patches(img, 3, 2);
    for (std::size_t k = 0; k < grid.patches.size(); ++k)
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                EXPECT_EQ(grid.patches[k](r, c), img(grid.origins[k].row + r, grid.origins[k].col + c));
}

TEST(Heatmap, MeanAbsoluteRemoval)
{
    const ImageGray a(3, 3, 0.5);
    EXPECT_EQ(removed_noise_heatmap(std::vector{a}, std::vector{a}), ImageGray(3, 3, 0.0));

    ImageGray d1 = a;
    d1(1, 2) += 0.2;
    const ImageGray single = removed_noise_heatmap(std::vector{a}, std::vector{d1});
    EXPECT_NEAR(single(1, 2), 0.2, 1e-15);
    EXPECT_EQ(single(0, 0), 0.0);

    ImageGray p1 = a;
    ImageGray p2 = a;
    p1(0, 0) -= 0.1;
    p2(0, 0) += 0.3;
    const ImageGray pair = removed_noise_heatmap(std::vector{a, a}, std::vector{p1, p2});
    EXPECT_NEAR(pair(0, 0), 0.2, 1e-15);

    EXPECT_THROW(removed_noise_heatmap(std::vector<ImageGray>{}, std::vector<ImageGray>{}), std::invalid_argument);
    EXPECT_THROW(removed_noise_heatmap(std::vector{a, ImageGray(2, 2)}, std::vector{a, a}), std::invalid_argument);
}

TEST(Pgm, RoundTripIsEightBitQuantization)
{
    ImageGray img(5, 6);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<double>(i) / 29.0;
    std::stringstream buf;
    write_pgm(buf, img);
    const ImageGray back = read_pgm(buf);
    ASSERT_TRUE(back.same_size(img));
    for (std::size_t i = 0; i < img.size(); ++i)
        EXPECT_EQ(back.data()[i], std::lround(img.data()[i] * 255.0) / 255.0);
    EXPECT_EQ(back, quantize_8bit(img));
}

TEST(Pgm, HeaderCommentsAndErrors)
{
    std::stringstream ok;
    ok << "P5\n# made by hand\n2 1\n255\n" << char(0) << char(255);
    const ImageGray img = read_pgm(ok);
    EXPECT_EQ(img(0, 0), 0.0);
    EXPECT_EQ(img(0, 1), 1.0);

    std::stringstream wrong_max;
    wrong_max << "P5\n2 1\n65535\n" << char(0) << char(0);
    EXPECT_THROW(read_pgm(wrong_max), std::invalid_argument);

    std::stringstream truncated;
    truncated << "P5\n4 4\n255\n" << char(1);
    EXPECT_THROW(read_pgm(truncated), std::invalid_argument);

    std::stringstream p2;
    p2 << "P2\n1 1\n255\n0\n";
    EXPECT_THROW(read_pgm(p2), std::invalid_argument);
}

TEST(Rng, StreamsAreReproducibleAndKeyed)
{
    CounterRng a(5);
    CounterRng b(5);
    CounterRng c(6);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
    EXPECT_NE(derive_seed(1, "fusion"), derive_seed(1, "denoiser"));
    EXPECT_EQ(derive_seed(1, "fusion"), derive_seed(1, "fusion"));
    EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
}

TEST(Rng, BelowAndNormalMoments)
{
    CounterRng rng(99);
    std::vector<int> counts(8, 0);
    for (int i = 0; i < 80000; ++i)
        ++counts[rng.below(8)];
    for (int c : counts)
        EXPECT_NEAR(c, 10000, 500);

    double sum = 0.0;
    double sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.02);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(ToyData, GeneratorIsDeterministicAndQuantized)
{
    const auto a = generate_toy_images(6, 20, 3);
    const auto b = generate_toy_images(6, 20, 3);
    ASSERT_EQ(a.size(), 6u);
    EXPECT_EQ(a, b);
    for (const auto& img : a)
        for (double v : img.data()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            EXPECT_EQ(v, std::round(v * 255.0) / 255.0);
        }
}

#ifdef MFUSE_TOY_DIR
TEST(ToyData, BundledSetLoadsSorted)
{
    const auto images = load_pgm_dir(MFUSE_TOY_DIR);
    ASSERT_GE(images.size(), 20u);
    for (std::size_t i = 1; i < images.size(); ++i)
        EXPECT_LT(images[i - 1].name, images[i].name);
    const auto regenerated = generate_toy_images(images.size(), images.front().image.height(), 2024);
    for (std::size_t i = 0; i < images.size(); ++i)
        EXPECT_EQ(images[i].image, regenerated[i]) << images[i].name;
}
#endif
