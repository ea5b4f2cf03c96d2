#include "cli_support.hpp"
#include "mfuse/cli/config.hpp"
#include "mfuse/pgm.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace mfuse;
using mfuse::testing::count_lines;
using mfuse::testing::files_with_extension;
using mfuse::testing::run_cli;
using mfuse::testing::scratch_dir;
using mfuse::testing::slurp;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> with_out(const fs::path& out, std::vector<std::string> args)
{
    args.insert(args.begin(), {"--out", out.string()});
    return args;
}

// Smallest pipeline that still trains fusion models.
std::vector<std::string> small_pipeline(const fs::path& out, const std::string& jobs)
{
    return with_out(out, {"--jobs", jobs, "--set", "run.max_images=4", "--set", "run.eval_count=2", "--set",
                          "run.noise_levels=25", "--set", "denoiser.kind=dct", "--set", "manip.modes=0,3,8",
                          "--set", "fusion.epochs=2", "--set", "fusion.variants=spatial,channel,dual", "pipeline"});
}

} // namespace

TEST(Config, DefaultsOverridesAndUnknownKeys)
{
    cli::ExperimentConfig c;
    EXPECT_EQ(c.count("fusion.epochs"), 100);
    EXPECT_EQ(c.reals("run.noise_levels"), (std::vector<double>{10, 20, 30, 40, 50}));
    EXPECT_EQ(c.mode_ids("manip.modes").size(), 13u);
    c.set("fusion.epochs=7");
    EXPECT_EQ(c.count("fusion.epochs"), 7);
    EXPECT_THROW(c.set("fusion.epoch=7"), std::invalid_argument);
    EXPECT_THROW(c.set("no_equals_sign"), std::invalid_argument);

    std::istringstream ini("[denoiser]\n; comment\nwidth = 12\n[run]\nseed = 99\n");
    c.merge_stream(ini, "test");
    EXPECT_EQ(c.count("denoiser.width"), 12);
    EXPECT_EQ(c.seed(), 99u);
    std::istringstream bad("[denoiser]\nwidht = 12\n");
    EXPECT_THROW(c.merge_stream(bad, "test"), std::invalid_argument);

    std::ostringstream echo;
    c.write(echo);
    cli::ExperimentConfig back;
    std::istringstream in(echo.str());
    back.merge_stream(in, "test");
    std::ostringstream again;
    back.write(again);
    EXPECT_EQ(echo.str(), again.str());
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"synth"}).code, 1);
    const auto dir = scratch_dir("cli_codes");
    EXPECT_EQ(run_cli(with_out(dir, {"frobnicate"})).code, 1);
    EXPECT_EQ(run_cli(with_out(dir, {"--set", "run.bogus=1", "synth"})).code, 1);
    EXPECT_EQ(run_cli(with_out(dir, {"--set", "run.noise_levels=-5", "synth"})).code, 1);
    const auto missing = run_cli(with_out(dir, {"--overwrite", "--set", "denoiser.model=/nonexistent/model.params",
                                                "denoise"}));
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.err.find("/nonexistent/model.params"), std::string::npos);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, UnreadableImagesAreListed)
{
    const auto data = scratch_dir("cli_bad_data");
    fs::create_directories(data);
    std::ofstream(data / "a.pgm") << "P5\n2 2\n255\n";
    std::ofstream(data / "b.pgm") << "not an image";
    const auto r = run_cli(with_out(scratch_dir("cli_bad_out"), {"--set", "run.data_dir=" + data.string(), "synth"}));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("a.pgm"), std::string::npos);
    EXPECT_NE(r.err.find("b.pgm"), std::string::npos);
}

TEST(Cli, RefusesNonEmptyOutputWithoutOverwrite)
{
    const auto dir = scratch_dir("cli_overwrite");
    const std::vector<std::string> args{"--set", "run.max_images=2", "--set", "run.noise_levels=10", "synth"};
    ASSERT_EQ(run_cli(with_out(dir, args)).code, 0);
    const std::string manifest = slurp(dir / "manifest.csv");
    const auto again = run_cli(with_out(dir, args));
    EXPECT_EQ(again.code, 1);
    EXPECT_NE(again.err.find("--overwrite"), std::string::npos);
    auto forced = args;
    forced.insert(forced.begin(), "--overwrite");
    ASSERT_EQ(run_cli(with_out(dir, forced)).code, 0);
    EXPECT_EQ(slurp(dir / "manifest.csv"), manifest);
}

TEST(Cli, SynthCountsAndZeroNoise)
{
    const auto dir = scratch_dir("cli_synth");
    ASSERT_EQ(run_cli(with_out(dir, {"--set", "run.max_images=4", "synth"})).code, 0);
    EXPECT_EQ(files_with_extension(dir / "noisy", ".pgm").size(), 20u);
    EXPECT_EQ(count_lines(slurp(dir / "manifest.csv")), 21u);
    const std::string echo = slurp(dir / "resolved_config.ini");
    EXPECT_EQ(echo.rfind("; mfuse synth\n", 0), 0u);
    EXPECT_NE(echo.find("max_images = 4"), std::string::npos);

    const auto zero = scratch_dir("cli_synth_zero");
    ASSERT_EQ(run_cli(with_out(zero, {"--set", "run.max_images=2", "--set", "run.noise_levels=0", "synth"})).code, 0);
    cli::ExperimentConfig defaults;
    const fs::path data = defaults.text("run.data_dir");
    EXPECT_EQ(read_pgm(zero / "noisy" / "toy_00_s0.pgm"), read_pgm(data / "toy_00.pgm"));
}

TEST(Cli, SeedChangesOutputs)
{
    const auto a = scratch_dir("cli_seed_a");
    const auto b = scratch_dir("cli_seed_b");
    ASSERT_EQ(run_cli(with_out(a, {"--seed", "1", "--set", "run.max_images=1", "synth"})).code, 0);
    ASSERT_EQ(run_cli(with_out(b, {"--seed", "2", "--set", "run.max_images=1", "synth"})).code, 0);
    EXPECT_NE(slurp(a / "noisy" / "toy_00_s10.pgm"), slurp(b / "noisy" / "toy_00_s10.pgm"));
}

TEST(Cli, PipelineShapeAndJobsInvariance)
{
    const auto one = scratch_dir("cli_pipe_1");
    const auto three = scratch_dir("cli_pipe_3");
    const auto r = run_cli(small_pipeline(one, "1"));
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(run_cli(small_pipeline(three, "3")).code, 0);

    const std::string ensemble = slurp(one / "ensemble.csv");
    // header + five strategies
    EXPECT_EQ(count_lines(ensemble), 6u);
    for (const char* s : {"branch0", "simple_average", "spatial_only", "channel_only", "dual_fusion"})
        EXPECT_NE(ensemble.find(std::string(",") + s + ","), std::string::npos) << s;
    EXPECT_TRUE(fs::exists(one / "fusion" / "s25_dual_fusion.params"));
    EXPECT_EQ(count_lines(slurp(one / "fusion" / "s25_dual_fusion_history.csv")), 3u);
    EXPECT_TRUE(fs::exists(one / "heatmap" / "s25_mode3.pgm"));
    EXPECT_EQ(files_with_extension(one / "stacks", ".stack").size(), 4u);

    const auto csv_one = files_with_extension(one, ".csv");
    EXPECT_EQ(csv_one, files_with_extension(three, ".csv"));
    EXPECT_GE(csv_one.size(), 10u);
}

TEST(Cli, IdentityDenoiserTiesEverywhere)
{
    const auto dir = scratch_dir("cli_identity");
    const auto r = run_cli(with_out(dir, {"--set", "run.max_images=4", "--set", "run.eval_count=2", "--set",
                                          "run.noise_levels=30", "--set", "denoiser.kind=identity", "--set",
                                          "manip.modes=0,1,2,3,4,5,6,7", "--set", "fusion.epochs=1", "--set",
                                          "fusion.variants=spatial,channel", "pipeline"}));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream rows(slurp(dir / "ensemble.csv"));
    std::string line;
    std::getline(rows, line);
    std::set<std::string> scores;
    while (std::getline(rows, line)) {
        const auto last = line.rfind(',');
        const auto prev = line.rfind(',', last - 1);
        scores.insert(line.substr(prev + 1, last - prev - 1));
    }
    EXPECT_EQ(scores.size(), 1u);
}

TEST(Cli, TrainAuxZeroWeightMatchesBaselineBytes)
{
    const auto dir = scratch_dir("cli_aux");
    const auto r = run_cli(with_out(
        dir, {"--set", "run.max_images=3", "--set", "run.eval_count=1", "--set", "denoiser.depth=3", "--set",
              "denoiser.width=4", "--set", "denoiser.epochs=2", "--set", "aux.lambda=0", "--set", "aux.window=2",
              "--set", "aux.estimator_width=4", "--set", "aux.configs=baseline,l1,image", "train-aux"}));
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string base = slurp(dir / "aux" / "baseline.params");
    EXPECT_FALSE(base.empty());
    EXPECT_EQ(slurp(dir / "aux" / "l1.params"), base);
    EXPECT_EQ(slurp(dir / "aux" / "image.params"), base);
    EXPECT_EQ(count_lines(slurp(dir / "stability.csv")), 4u);
}
