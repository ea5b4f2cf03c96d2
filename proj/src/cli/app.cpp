#include "mfuse/cli/app.hpp"

#include "mfuse/cli/commands.hpp"

#include <CLI11.hpp>

#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>

namespace mfuse::cli {
namespace {

void prepare_output(const RunContext& ctx, bool overwrite, const std::string& command)
{
    namespace fs = std::filesystem;
    if (fs::exists(ctx.out_dir)) {
        if (!fs::is_directory(ctx.out_dir))
            throw std::invalid_argument(fmt::format("output path {} is not a directory", ctx.out_dir.string()));
        if (!fs::is_empty(ctx.out_dir) && !overwrite)
            throw std::invalid_argument(fmt::format(
                "output directory {} is not empty; pass --overwrite to replace its artifacts", ctx.out_dir.string()));
    }
    fs::create_directories(ctx.out_dir);
    std::ofstream echo(ctx.out_dir / "resolved_config.ini");
    if (!echo)
        throw std::runtime_error(fmt::format("cannot write {}", (ctx.out_dir / "resolved_config.ini").string()));
    echo << "; mfuse " << command << '\n';
    ctx.config.write(echo);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Ensemble-of-manipulations denoising toolkit", "mfuse"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> assignments;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string out_dir;
    bool overwrite = false;
    app.add_option("--config", config_path, "INI file with [section] key = value settings");
    app.add_option("--set", assignments, "Override one setting, e.g. --set fusion.epochs=20");
    auto* seed_opt = app.add_option("--seed", seed, "Root seed (overrides run.seed)");
    app.add_option("--jobs", jobs, "Worker threads for per-image stages")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_flag("--overwrite", overwrite, "Allow writing into a non-empty output directory");

    const std::map<std::string, std::pair<std::string, std::function<void(const RunContext&)>>> commands{
        {"synth", {"Write seeded noisy copies of the clean images", run_synth}},
        {"denoise", {"Denoise a directory of PGM images", run_denoise}},
        {"pipeline", {"Stacks, fusion, ensemble scores, PSD curves and heat maps", run_pipeline}},
        {"train-denoiser", {"Train the tiny residual denoiser", run_train_denoiser}},
        {"train-fusion", {"Build branch stacks and train fusion models per noise level", run_train_fusion}},
        {"train-aux", {"Retrain the denoiser with auxiliary losses", run_train_aux}},
        {"eval", {"Score ensemble strategies with saved fusion models", run_eval}},
        {"psd", {"Radially averaged power spectra", run_psd}},
        {"heatmap", {"Average removed-noise heat maps per mode", run_heatmap}},
    };
    for (const auto& [name, entry] : commands)
        app.add_subcommand(name, entry.first);

    std::vector<const char*> argv{"mfuse"};
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        RunContext ctx;
        if (!config_path.empty())
            ctx.config.merge_file(config_path);
        for (const auto& a : assignments)
            ctx.config.set(a);
        if (seed_opt->count() > 0)
            ctx.config.set("run.seed", std::to_string(seed));
        ctx.config.seed(); // validate early
        ctx.out_dir = out_dir;
        ctx.jobs = jobs;
        ctx.log = &out;
        prepare_output(ctx, overwrite, command);
        commands.at(command).second(ctx);
        out << fmt::format("{}: done, artifacts in {}\n", command, ctx.out_dir.string());
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "error: " << command << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << command << ": " << e.what() << '\n';
        return 2;
    }
}

} // namespace mfuse::cli
