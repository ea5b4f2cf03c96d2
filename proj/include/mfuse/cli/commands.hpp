#pragma once

#include "mfuse/cli/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace mfuse::cli {

/// Everything a subcommand needs. All artifacts go under `out_dir`.
struct RunContext {
    ExperimentConfig config;
    std::filesystem::path out_dir;
    std::size_t jobs = 1;
    std::ostream* log = nullptr;

    std::uint64_t seed() const { return config.seed(); }
};

void run_synth(const RunContext& ctx);
void run_denoise(const RunContext& ctx);
void run_pipeline(const RunContext& ctx);
void run_train_denoiser(const RunContext& ctx);
void run_train_fusion(const RunContext& ctx);
void run_train_aux(const RunContext& ctx);
void run_eval(const RunContext& ctx);
void run_psd(const RunContext& ctx);
void run_heatmap(const RunContext& ctx);

} // namespace mfuse::cli
