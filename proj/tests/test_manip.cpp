#include "mfuse/freq/mask.hpp"
#include "mfuse/manip/branch.hpp"
#include "mfuse/manip/dihedral.hpp"
#include "mfuse/parallel.hpp"
#include "mfuse/rng.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

using namespace mfuse;
using namespace mfuse::manip;

namespace {

ImageGray grid(std::size_t h, std::size_t w, std::vector<double> v)
{
    return ImageGray(h, w, std::move(v));
}

ImageGray random_image(std::size_t h, std::size_t w, std::uint64_t seed)
{
    CounterRng rng(seed);
    ImageGray img(h, w);
    for (double& v : img.data())
        v = rng.uniform();
    return img;
}

// Throws for one chosen input size, used to check error wrapping.
class FailingDenoiser final : public Denoiser {
public:
    ImageGray denoise(const ImageGray&) const override { throw std::runtime_error("boom"); }
    std::string name() const override { return "failing"; }
};

// Records the peak number of concurrent calls.
class SerialProbe final : public Denoiser {
public:
    ImageGray denoise(const ImageGray& x) const override
    {
        const int now = ++active_;
        int prev = peak_.load();
        while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --active_;
        return clip_unit(x);
    }
    std::string name() const override { return "probe"; }
    bool parallel_safe() const override { return false; }
    int peak() const { return peak_.load(); }

private:
    mutable std::atomic<int> active_{0};
    mutable std::atomic<int> peak_{0};
};

} // namespace

TEST(Modes, RegistryAndErrors)
{
    EXPECT_EQ(all_modes().size(), 13u);
    EXPECT_EQ(dihedral_modes().size(), 8u);
    EXPECT_THROW(ManipulationMode::from_id(13), std::invalid_argument);
    EXPECT_THROW(ManipulationMode::from_id(-1), std::invalid_argument);
    EXPECT_THROW(ManipulationMode::from_id(9).dihedral(), std::invalid_argument);
    EXPECT_THROW(ManipulationMode::from_id(2).mask(), std::invalid_argument);
    EXPECT_EQ(ManipulationMode::from_id(5).dihedral(), (DihedralAction{1, false}));
    EXPECT_EQ(ManipulationMode::from_id(7).dihedral(), (DihedralAction{3, true}));
}

TEST(Dihedral, HandComputedTwoByTwo)
{
    const ImageGray x = grid(2, 2, {1, 2, 3, 4});
    const std::vector<std::vector<double>> expected{
        {1, 2, 3, 4}, {1, 3, 2, 4}, {3, 4, 1, 2}, {3, 1, 4, 2},
        {2, 1, 4, 3}, {2, 4, 1, 3}, {4, 3, 2, 1}, {4, 2, 3, 1},
    };
    for (int id = 0; id < 8; ++id)
        EXPECT_EQ(apply_dihedral(x, ManipulationMode::from_id(id)), grid(2, 2, expected[id])) << "mode " << id;
}

TEST(Dihedral, HandComputedTwoByThree)
{
    const ImageGray x = grid(2, 3, {1, 2, 3, 4, 5, 6});
    const ImageGray wide_expected[] = {grid(2, 3, {1, 2, 3, 4, 5, 6}), grid(2, 3, {4, 5, 6, 1, 2, 3}),
                                       grid(2, 3, {3, 2, 1, 6, 5, 4}), grid(2, 3, {6, 5, 4, 3, 2, 1})};
    const int wide_ids[] = {0, 2, 4, 6};
    for (int k = 0; k < 4; ++k)
        EXPECT_EQ(apply_dihedral(x, ManipulationMode::from_id(wide_ids[k])), wide_expected[k]);
    const ImageGray tall_expected[] = {grid(3, 2, {1, 4, 2, 5, 3, 6}), grid(3, 2, {4, 1, 5, 2, 6, 3}),
                                       grid(3, 2, {3, 6, 2, 5, 1, 4}), grid(3, 2, {6, 3, 5, 2, 4, 1})};
    const int tall_ids[] = {1, 3, 5, 7};
    for (int k = 0; k < 4; ++k)
        EXPECT_EQ(apply_dihedral(x, ManipulationMode::from_id(tall_ids[k])), tall_expected[k])
            << "mode " << tall_ids[k];
}

TEST(Dihedral, InverseRoundTripsNonSquare)
{
    const ImageGray x = random_image(5, 8, 4);
    for (int id = 0; id < 8; ++id) {
        const auto mode = ManipulationMode::from_id(id);
        EXPECT_EQ(invert_dihedral(apply_dihedral(x, mode), mode), x) << "mode " << id;
        EXPECT_EQ(apply_dihedral(invert_dihedral(x, mode), mode), x) << "mode " << id;
    }
    EXPECT_THROW(apply_dihedral(x, ManipulationMode::from_id(8)), std::invalid_argument);
    EXPECT_THROW(invert_dihedral(x, ManipulationMode::from_id(12)), std::invalid_argument);
}

TEST(Dihedral, EightDistinctImages)
{
    const ImageGray x = random_image(4, 4, 5);
    std::vector<ImageGray> seen;
    for (int id = 0; id < 8; ++id) {
        const ImageGray y = apply_dihedral(x, ManipulationMode::from_id(id));
        for (const auto& s : seen)
            EXPECT_NE(s, y);
        seen.push_back(y);
    }
}

TEST(Branch, ManipulateAndRealign)
{
    const ImageGray x = grid(2, 2, {1.5, 0.2, -0.1, 0.7});
    EXPECT_EQ(manipulate(x, ManipulationMode::from_id(0)), clip_unit(x));
    EXPECT_EQ(manipulate(x, ManipulationMode::from_id(3)), rotate_ccw(clip_unit(x), 3));

    const ImageGray flat(6, 6, 0.4);
    const ImageGray masked = manipulate(flat, ManipulationMode::from_id(8));
    for (double v : masked.data())
        EXPECT_NEAR(v, 0.4, 1e-12);

    ImageGray marked(3, 5, 0.0);
    marked(0, 4) = 1.0;
    const auto m5 = ManipulationMode::from_id(5);
    EXPECT_EQ(realign(manipulate(marked, m5), m5), marked);
    const auto m10 = ManipulationMode::from_id(10);
    EXPECT_EQ(realign(marked, m10), marked);
}

TEST(Branch, IdentityDenoiserSingleMode)
{
    const ImageGray x = grid(2, 2, {1.2, 0.5, 0.1, -0.3});
    const std::vector modes{ManipulationMode::from_id(0)};
    const BranchStack s = build_branch_stack(x, IdentityDenoiser{}, modes);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.images[0], clip_unit(x));
}

TEST(Branch, PointwiseDenoiserMakesDihedralBranchesIdentical)
{
    const ImageGray x = random_image(6, 9, 6);
    const PointwiseDenoiser d([](double v) { return 0.8 * v + 0.05; });
    const BranchStack s = build_branch_stack(x, d, dihedral_modes());
    ASSERT_EQ(s.size(), 8u);
    for (std::size_t k = 1; k < 8; ++k)
        EXPECT_EQ(s.images[k], s.images[0]);
}

TEST(Branch, AllModesSortedAndShaped)
{
    const ImageGray x = random_image(7, 10, 7);
    std::vector<ManipulationMode> shuffled;
    for (int id : {12, 3, 0, 9, 5, 1, 11, 2, 8, 4, 10, 7, 6})
        shuffled.push_back(ManipulationMode::from_id(id));
    const BranchStack s = build_branch_stack(x, IdentityDenoiser{}, shuffled);
    ASSERT_EQ(s.size(), 13u);
    for (int id = 0; id < 13; ++id) {
        EXPECT_EQ(s.modes[id].id(), id);
        EXPECT_EQ(s.images[id].height(), 7u);
        EXPECT_EQ(s.images[id].width(), 10u);
    }
}

TEST(Branch, RejectsDuplicatesAndWrapsErrors)
{
    const ImageGray x(4, 4, 0.5);
    const std::vector dup{ManipulationMode::from_id(2), ManipulationMode::from_id(2)};
    EXPECT_THROW(build_branch_stack(x, IdentityDenoiser{}, dup), std::invalid_argument);
    const std::vector one{ManipulationMode::from_id(9)};
    try {
        build_branch_stack(x, FailingDenoiser{}, one);
        FAIL() << "expected failure";
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find("mode 9"), std::string::npos) << e.what();
    }
}

TEST(Branch, ParallelMatchesSerialAndSerialDenoiserHonored)
{
    const ImageGray x = random_image(12, 12, 8);
    const PointwiseDenoiser d([](double v) { return v * v; });
    const auto modes = all_modes();
    const BranchStack a = build_branch_stack(x, d, modes, 1);
    const BranchStack b = build_branch_stack(x, d, modes, 4);
    EXPECT_EQ(a.images, b.images);

    SerialProbe probe;
    build_branch_stack(x, probe, modes, 4);
    EXPECT_EQ(probe.peak(), 1);
}

TEST(Branch, SimpleAverage)
{
    BranchStack same;
    const ImageGray a = random_image(3, 3, 9);
    for (int id = 0; id < 4; ++id) {
        same.modes.push_back(ManipulationMode::from_id(id));
        same.images.push_back(a);
    }
    EXPECT_EQ(simple_average(same), a);

    BranchStack two;
    two.modes = {ManipulationMode::from_id(0), ManipulationMode::from_id(1)};
    two.images = {ImageGray(2, 2, 0.2), ImageGray(2, 2, 0.4)};
    const ImageGray avg = simple_average(two);
    for (double v : avg.data())
        EXPECT_NEAR(v, 0.3, 1e-15);
}

TEST(Branch, AveragingReducesVariance)
{
    const ImageGray clean(32, 32, 0.5);
    BranchStack s;
    double mean_branch_mse = 0.0;
    for (int id = 0; id < 8; ++id) {
        s.modes.push_back(ManipulationMode::from_id(id));
        s.images.push_back(add_awgn(clean, NoiseLevel(10), 50 + id));
        mean_branch_mse += mse(clean, s.images.back()) / 8.0;
    }
    EXPECT_LT(mse(clean, simple_average(s)), mean_branch_mse);
}

TEST(Parallel, OrderedResultsAndLowestIndexError)
{
    const auto squares = parallel_map(50, 4, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < 50; ++i)
        EXPECT_EQ(squares[i], i * i);
    try {
        parallel_map(20, 4, [](std::size_t i) -> int {
            if (i == 7 || i == 13)
                throw std::runtime_error(std::to_string(i));
            return 0;
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
}
