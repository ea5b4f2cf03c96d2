#include "mfuse/cli/commands.hpp"

#include "mfuse/dataset.hpp"
#include "mfuse/freq/psd.hpp"
#include "mfuse/manip/branch.hpp"
#include "mfuse/models/auxloss.hpp"
#include "mfuse/models/classical.hpp"
#include "mfuse/models/denoiser_training.hpp"
#include "mfuse/models/fusion.hpp"
#include "mfuse/models/tiny_denoiser.hpp"
#include "mfuse/nn/serialize.hpp"
#include "mfuse/parallel.hpp"
#include "mfuse/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mfuse::cli {
namespace {

namespace fs = std::filesystem;
using models::FusionModel;
using models::FusionSample;
using models::FusionVariant;

void write_file(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out)
        throw std::runtime_error(fmt::format("failed writing {}", path.string()));
}

void note(const RunContext& ctx, const std::string& line)
{
    if (ctx.log != nullptr)
        *ctx.log << line << '\n';
}

std::string sigma_tag(double sigma)
{
    std::string s = fmt::format("s{}", sigma);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

/// Every PGM in the directory; unreadable files are collected and reported together.
std::vector<NamedImage> load_images(const fs::path& dir, std::size_t max_images)
{
    if (!fs::is_directory(dir))
        throw std::invalid_argument(fmt::format("image directory {} does not exist", dir.string()));
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (max_images > 0 && files.size() > max_images)
        files.resize(max_images);
    std::vector<NamedImage> images;
    std::vector<std::string> failures;
    for (const auto& f : files) {
        try {
            images.push_back({f.stem().string(), read_pgm(f)});
        } catch (const std::exception& e) {
            failures.push_back(fmt::format("{}: {}", f.string(), e.what()));
        }
    }
    if (!failures.empty()) {
        std::string msg = fmt::format("{} of {} images failed to load:", failures.size(), files.size());
        for (const auto& f : failures)
            msg += "\n  " + f;
        throw std::runtime_error(msg);
    }
    if (images.empty())
        throw std::invalid_argument(fmt::format("no .pgm images in {}", dir.string()));
    return images;
}

std::vector<NamedImage> load_clean(const RunContext& ctx)
{
    return load_images(ctx.config.text("run.data_dir"), ctx.config.count("run.max_images"));
}

/// Images keep their position in the sorted list as `index`, which keys their noise.
struct IndexedImage {
    std::size_t index;
    NamedImage image;
};

struct Split {
    std::vector<IndexedImage> train;
    std::vector<IndexedImage> eval;
};

Split split_images(const RunContext& ctx, const std::vector<NamedImage>& images, bool need_train)
{
    const std::size_t eval_count = ctx.config.count("run.eval_count", 1);
    if (eval_count > images.size() || (need_train && eval_count >= images.size()))
        throw std::invalid_argument(fmt::format("run.eval_count = {} leaves no {} images out of {}", eval_count,
                                                need_train ? "training" : "evaluation", images.size()));
    Split split;
    const std::size_t first_eval = images.size() - eval_count;
    for (std::size_t i = 0; i < images.size(); ++i)
        (i < first_eval ? split.train : split.eval).push_back({i, images[i]});
    return split;
}

std::uint64_t noise_seed(std::uint64_t root, double sigma, std::size_t index)
{
    const auto level = static_cast<std::uint64_t>(std::llround(sigma * 1000.0));
    return derive_seed(derive_seed(derive_seed(root, "noise"), level), static_cast<std::uint64_t>(index));
}

/// Test-time noisy input: seeded AWGN, clipped.
ImageGray noisy_copy(const IndexedImage& img, double sigma, std::uint64_t root)
{
    return clip_unit(add_awgn(img.image.image, NoiseLevel(sigma), noise_seed(root, sigma, img.index)));
}

std::vector<double> noise_levels(const RunContext& ctx)
{
    std::vector<double> levels = ctx.config.reals("run.noise_levels");
    if (levels.empty())
        throw std::invalid_argument("run.noise_levels is empty");
    for (double s : levels)
        NoiseLevel{s};
    return levels;
}

std::vector<manip::ManipulationMode> configured_modes(const RunContext& ctx)
{
    std::vector<int> ids = ctx.config.mode_ids("manip.modes");
    if (ids.empty())
        throw std::invalid_argument("manip.modes is empty");
    std::vector<manip::ManipulationMode> modes = manip::modes_from_ids(ids);
    std::sort(modes.begin(), modes.end());
    if (std::adjacent_find(modes.begin(), modes.end()) != modes.end())
        throw std::invalid_argument("manip.modes lists a mode twice");
    return modes;
}

models::TinyDenoiserConfig tiny_config(const RunContext& ctx)
{
    models::TinyDenoiserConfig c;
    c.depth = ctx.config.count("denoiser.depth", 2);
    c.width = ctx.config.count("denoiser.width", 1);
    return c;
}

std::uint64_t denoiser_seed(const RunContext& ctx)
{
    return derive_seed(ctx.seed(), "denoiser");
}

models::DenoiserTrainConfig denoiser_train_config(const RunContext& ctx)
{
    models::DenoiserTrainConfig c;
    c.epochs = static_cast<int>(ctx.config.count("denoiser.epochs", 1));
    c.batch_size = ctx.config.count("denoiser.batch_size", 1);
    c.sigma_min = 0.0;
    c.sigma_max = ctx.config.real("denoiser.sigma_max");
    c.eval_sigma = ctx.config.real("denoiser.eval_sigma");
    c.augment = ctx.config.flag("denoiser.augment");
    c.seed = denoiser_seed(ctx);
    c.validate();
    return c;
}

struct LoadedDenoiser {
    std::unique_ptr<models::TinyDenoiser> tiny;
    std::unique_ptr<Denoiser> impl;
};

LoadedDenoiser load_tiny(const RunContext& ctx)
{
    const std::string path = ctx.config.text("denoiser.model");
    if (path.empty())
        throw std::invalid_argument("denoiser.kind = tiny needs denoiser.model (a trained parameter file)");
    if (!fs::exists(path))
        throw std::invalid_argument(fmt::format("denoiser model file {} does not exist", path));
    LoadedDenoiser d;
    d.tiny = std::make_unique<models::TinyDenoiser>(tiny_config(ctx), 0);
    nn::load_params(fs::path(path), d.tiny->params());
    d.impl = std::make_unique<models::TinyDenoiserAdapter>(*d.tiny);
    return d;
}

/// Denoiser for inputs at noise level `sigma` (only the DCT baseline uses it).
LoadedDenoiser make_denoiser(const RunContext& ctx, double sigma)
{
    const std::string kind = ctx.config.text("denoiser.kind");
    if (kind == "tiny")
        return load_tiny(ctx);
    LoadedDenoiser d;
    if (kind == "dct")
        d.impl = std::make_unique<models::DctThresholdDenoiser>(NoiseLevel(sigma));
    else if (kind == "identity")
        d.impl = std::make_unique<IdentityDenoiser>();
    else
        throw std::invalid_argument(fmt::format("denoiser.kind must be tiny, dct or identity, got '{}'", kind));
    return d;
}

/// Stacks are computed in parallel across images when the denoiser allows it.
std::vector<manip::BranchStack> build_stacks(const RunContext& ctx, const std::vector<ImageGray>& noisy,
                                             const Denoiser& denoiser,
                                             const std::vector<manip::ManipulationMode>& modes)
{
    const std::size_t jobs = denoiser.parallel_safe() ? ctx.jobs : 1;
    return parallel_map(noisy.size(), jobs, [&](std::size_t i) {
        try {
            return manip::build_branch_stack(noisy[i], denoiser, modes, 1);
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("image {}: {}", i, e.what()));
        }
    });
}

struct LevelData {
    std::vector<IndexedImage> images;
    std::vector<ImageGray> noisy;
    std::vector<FusionSample> samples;
};

LevelData make_level(const RunContext& ctx, const std::vector<IndexedImage>& images, double sigma,
                     const Denoiser& denoiser, const std::vector<manip::ManipulationMode>& modes)
{
    LevelData level;
    level.images = images;
    for (const auto& img : images)
        level.noisy.push_back(noisy_copy(img, sigma, ctx.seed()));
    std::vector<manip::BranchStack> stacks = build_stacks(ctx, level.noisy, denoiser, modes);
    for (std::size_t i = 0; i < images.size(); ++i)
        level.samples.push_back({std::move(stacks[i]), images[i].image.image});
    return level;
}

void cache_stacks(const RunContext& ctx, double sigma, const LevelData& level)
{
    const fs::path dir = ctx.out_dir / "stacks" / sigma_tag(sigma);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < level.samples.size(); ++i)
        models::save_stack(dir / (level.images[i].image.name + ".stack"), level.samples[i].stack,
                           &level.samples[i].clean);
}

std::vector<FusionVariant> fusion_variants(const RunContext& ctx)
{
    std::vector<FusionVariant> out;
    for (const auto& v : ctx.config.list("fusion.variants"))
        out.push_back(models::parse_fusion_variant(v));
    std::sort(out.begin(), out.end(), [](FusionVariant a, FusionVariant b) {
        // spatial_only, channel_only, dual_fusion: the reporting order
        auto rank = [](FusionVariant v) { return v == FusionVariant::spatial_only ? 0 : v == FusionVariant::channel_only ? 1 : 2; };
        return rank(a) < rank(b);
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

models::FusionModelConfig fusion_model_config(const RunContext& ctx, std::size_t n_branches, FusionVariant v)
{
    models::FusionModelConfig c;
    c.n_branches = n_branches;
    c.trunk_channels = ctx.config.count("fusion.trunk_channels", 1);
    c.se_hidden = ctx.config.count("fusion.se_hidden", 1);
    c.variant = v;
    return c;
}

std::uint64_t fusion_seed(const RunContext& ctx, double sigma, FusionVariant v)
{
    const std::uint64_t base = derive_seed(derive_seed(ctx.seed(), "fusion"), static_cast<std::uint64_t>(std::llround(sigma * 1000.0)));
    return derive_seed(base, models::to_string(v));
}

fs::path fusion_model_path(const fs::path& dir, double sigma, FusionVariant v)
{
    return dir / fmt::format("{}_{}.params", sigma_tag(sigma), models::to_string(v));
}

using FusionSet = std::map<FusionVariant, std::unique_ptr<FusionModel>>;

FusionSet train_fusion_models(const RunContext& ctx, double sigma, const std::vector<FusionSample>& train,
                              const std::vector<FusionSample>& validation, std::size_t n_branches)
{
    models::FusionTrainConfig tc;
    tc.epochs = static_cast<int>(ctx.config.count("fusion.epochs", 1));
    tc.batch_size = ctx.config.count("fusion.batch_size", 1);
    tc.patch_size = ctx.config.count("fusion.patch_size", 1);
    tc.stride = ctx.config.count("fusion.stride", 1);
    FusionSet set;
    for (FusionVariant v : fusion_variants(ctx)) {
        const std::uint64_t seed = fusion_seed(ctx, sigma, v);
        auto model = std::make_unique<FusionModel>(fusion_model_config(ctx, n_branches, v), seed);
        tc.seed = seed;
        const models::FusionHistory history = models::train_fusion(*model, train, validation, tc);
        const fs::path dir = ctx.out_dir / "fusion";
        fs::create_directories(dir);
        nn::save_params(fusion_model_path(dir, sigma, v), model->params());
        std::ostringstream csv;
        models::write_fusion_history_csv(csv, history);
        write_file(dir / fmt::format("{}_{}_history.csv", sigma_tag(sigma), models::to_string(v)), csv.str());
        note(ctx, fmt::format("sigma {}: trained {} ({} epochs, final validation {} dB)", sigma, models::to_string(v),
                              tc.epochs, history.back().psnr.to_string()));
        set.emplace(v, std::move(model));
    }
    return set;
}

FusionSet load_fusion_models(const RunContext& ctx, const fs::path& dir, double sigma, std::size_t n_branches)
{
    FusionSet set;
    for (FusionVariant v : fusion_variants(ctx)) {
        const fs::path path = fusion_model_path(dir, sigma, v);
        if (!fs::exists(path))
            throw std::invalid_argument(fmt::format("fusion model file {} does not exist", path.string()));
        auto model = std::make_unique<FusionModel>(fusion_model_config(ctx, n_branches, v), 0);
        nn::load_params(path, model->params());
        set.emplace(v, std::move(model));
    }
    return set;
}

models::EnsembleModels ensemble_view(const FusionSet& set)
{
    models::EnsembleModels m;
    for (const auto& [v, model] : set) {
        if (v == FusionVariant::spatial_only)
            m.spatial_only = model.get();
        else if (v == FusionVariant::channel_only)
            m.channel_only = model.get();
        else
            m.dual = model.get();
    }
    return m;
}

/// Appends scores for one noise level to the aggregate and per-image tables.
void record_scores(double sigma, const LevelData& level, const models::EnsembleEvaluation& eval,
                   std::ostringstream& aggregate, std::ostringstream& per_image)
{
    models::write_ensemble_csv(aggregate, sigma, eval.aggregate, false);
    for (std::size_t i = 0; i < eval.per_image.size(); ++i)
        for (std::size_t k = 0; k < eval.strategies.size(); ++k)
            per_image << fmt::format("{},{},{},{}\n", sigma, level.images[i].image.name, eval.strategies[k],
                                     eval.per_image[i][k].to_string());
}

void record_branch_psnr(double sigma, const LevelData& level, std::ostringstream& csv)
{
    for (std::size_t i = 0; i < level.samples.size(); ++i) {
        csv << fmt::format("{},{}", sigma, level.images[i].image.name);
        for (const auto& branch : level.samples[i].stack.images)
            csv << ',' << psnr(level.samples[i].clean, branch).to_string();
        csv << '\n';
    }
}

std::string branch_header(const std::vector<manip::ManipulationMode>& modes)
{
    std::string h = "noise_level,image";
    for (const auto& m : modes)
        h += fmt::format(",mode_{}", m.id());
    return h + "\n";
}

void write_heatmaps(const RunContext& ctx, double sigma, const LevelData& level,
                    const std::vector<manip::ManipulationMode>& modes)
{
    const fs::path dir = ctx.out_dir / "heatmap";
    fs::create_directories(dir);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        std::vector<ImageGray> branch;
        for (const auto& s : level.samples)
            branch.push_back(s.stack.images[k]);
        const ImageGray map = removed_noise_heatmap(level.noisy, branch);
        const std::string stem = fmt::format("{}_mode{}", sigma_tag(sigma), modes[k].id());
        std::ostringstream csv;
        for (std::size_t r = 0; r < map.height(); ++r) {
            for (std::size_t c = 0; c < map.width(); ++c)
                csv << (c == 0 ? "" : ",") << fmt::format("{:.9e}", map(r, c));
            csv << '\n';
        }
        write_file(dir / (stem + ".csv"), csv.str());
        // PGM scaled so the largest mean removal maps to white.
        const double peak = *std::max_element(map.data().begin(), map.data().end());
        std::vector<double> scaled(map.data().begin(), map.data().end());
        for (double& v : scaled)
            v = peak > 0.0 ? v / peak : 0.0;
        write_pgm(dir / (stem + ".pgm"), ImageGray(map.height(), map.width(), std::move(scaled)));
    }
}

void write_psd(const RunContext& ctx, const std::string& stem, const std::vector<ImageGray>& images)
{
    std::ostringstream csv;
    freq::write_psd_csv(csv, freq::psd(images, ctx.config.count("psd.bins", 1)));
    write_file(ctx.out_dir / "psd" / (stem + ".csv"), csv.str());
}

std::vector<ImageGray> clean_of(const std::vector<IndexedImage>& images)
{
    std::vector<ImageGray> out;
    for (const auto& i : images)
        out.push_back(i.image.image);
    return out;
}

std::vector<ImageGray> patches_of(const RunContext& ctx, const std::vector<IndexedImage>& images)
{
    const std::size_t size = ctx.config.count("denoiser.patch_size", 1);
    const std::size_t stride = ctx.config.count("denoiser.stride", 1);
    std::vector<ImageGray> out;
    for (const auto& img : images) {
        PatchGrid grid = extract_patches(img.image.image, size, stride);
        for (auto& p : grid.patches)
            out.push_back(std::move(p));
    }
    if (out.empty())
        throw std::invalid_argument(fmt::format("no {}x{} training patches fit in the images", size, size));
    return out;
}

const std::string ensemble_header = "noise_level,strategy,mean_psnr_db,n_images\n";
const std::string per_image_header = "noise_level,image,strategy,psnr_db\n";

} // namespace

void run_synth(const RunContext& ctx)
{
    const auto images = load_clean(ctx);
    const bool clip = ctx.config.flag("synth.clip");
    std::ostringstream manifest;
    manifest << "file,source,noise_level,seed,clipped\n";
    for (double sigma : noise_levels(ctx)) {
        const NoiseLevel level(sigma);
        for (std::size_t i = 0; i < images.size(); ++i) {
            const std::uint64_t seed = noise_seed(ctx.seed(), sigma, i);
            ImageGray noisy = add_awgn(images[i].image, level, seed);
            if (clip)
                noisy = clip_unit(noisy);
            const std::string file = fmt::format("{}_{}.pgm", images[i].name, sigma_tag(sigma));
            fs::create_directories(ctx.out_dir / "noisy");
            write_pgm(ctx.out_dir / "noisy" / file, noisy);
            manifest << fmt::format("noisy/{},{},{},{},{}\n", file, images[i].name, sigma, seed, clip);
        }
    }
    write_file(ctx.out_dir / "manifest.csv", manifest.str());
}

void run_denoise(const RunContext& ctx)
{
    std::string input = ctx.config.text("denoise.input");
    if (input.empty())
        input = ctx.config.text("run.data_dir");
    const auto images = load_images(input, ctx.config.count("run.max_images"));
    const LoadedDenoiser d = make_denoiser(ctx, ctx.config.real("denoise.sigma"));
    const std::size_t jobs = d.impl->parallel_safe() ? ctx.jobs : 1;
    const auto denoised = parallel_map(images.size(), jobs, [&](std::size_t i) { return d.impl->denoise(images[i].image); });
    std::ostringstream csv;
    csv << "image,mean_abs_change\n";
    for (std::size_t i = 0; i < images.size(); ++i) {
        fs::create_directories(ctx.out_dir / "denoised");
        write_pgm(ctx.out_dir / "denoised" / (images[i].name + ".pgm"), denoised[i]);
        double change = 0.0;
        for (std::size_t p = 0; p < denoised[i].size(); ++p)
            change += std::abs(denoised[i].data()[p] - images[i].image.data()[p]);
        csv << fmt::format("{},{:.9e}\n", images[i].name, change / static_cast<double>(denoised[i].size()));
    }
    write_file(ctx.out_dir / "denoise.csv", csv.str());
}

void run_train_denoiser(const RunContext& ctx)
{
    const Split split = split_images(ctx, load_clean(ctx), true);
    const auto config = denoiser_train_config(ctx);
    models::TinyDenoiser model(tiny_config(ctx), config.seed);
    const auto patches = patches_of(ctx, split.train);
    const auto heldout = clean_of(split.eval);
    note(ctx, fmt::format("training tiny denoiser on {} patches for {} epochs", patches.size(), config.epochs));
    const models::TrainHistory history = models::train_denoiser(model, patches, heldout, config);
    nn::save_params(ctx.out_dir / "denoiser.params", model.params());
    std::ostringstream csv;
    models::write_history_csv(csv, history);
    write_file(ctx.out_dir / "denoiser_history.csv", csv.str());
}

void run_train_fusion(const RunContext& ctx)
{
    const Split split = split_images(ctx, load_clean(ctx), true);
    const auto modes = configured_modes(ctx);
    for (double sigma : noise_levels(ctx)) {
        const LoadedDenoiser d = make_denoiser(ctx, sigma);
        const LevelData train = make_level(ctx, split.train, sigma, *d.impl, modes);
        const LevelData eval = make_level(ctx, split.eval, sigma, *d.impl, modes);
        cache_stacks(ctx, sigma, train);
        cache_stacks(ctx, sigma, eval);
        train_fusion_models(ctx, sigma, train.samples, eval.samples, modes.size());
    }
}

void run_eval(const RunContext& ctx)
{
    const std::string model_dir = ctx.config.text("fusion.model_dir");
    if (model_dir.empty())
        throw std::invalid_argument("eval needs fusion.model_dir (output of train-fusion, e.g. <out>/fusion)");
    const Split split = split_images(ctx, load_clean(ctx), false);
    const auto modes = configured_modes(ctx);
    std::ostringstream aggregate;
    std::ostringstream per_image;
    aggregate << ensemble_header;
    per_image << per_image_header;
    for (double sigma : noise_levels(ctx)) {
        const LoadedDenoiser d = make_denoiser(ctx, sigma);
        const LevelData level = make_level(ctx, split.eval, sigma, *d.impl, modes);
        const FusionSet models = load_fusion_models(ctx, model_dir, sigma, modes.size());
        const auto eval = models::evaluate_ensembles(level.samples, ensemble_view(models), ctx.jobs);
        record_scores(sigma, level, eval, aggregate, per_image);
    }
    write_file(ctx.out_dir / "ensemble.csv", aggregate.str());
    write_file(ctx.out_dir / "per_image.csv", per_image.str());
}

void run_pipeline(const RunContext& ctx)
{
    const std::string model_dir = ctx.config.text("fusion.model_dir");
    const Split split = split_images(ctx, load_clean(ctx), model_dir.empty());
    const auto modes = configured_modes(ctx);
    std::ostringstream aggregate;
    std::ostringstream per_image;
    std::ostringstream branches;
    aggregate << ensemble_header;
    per_image << per_image_header;
    branches << branch_header(modes);
    for (double sigma : noise_levels(ctx)) {
        const LoadedDenoiser d = make_denoiser(ctx, sigma);
        const LevelData eval = make_level(ctx, split.eval, sigma, *d.impl, modes);
        cache_stacks(ctx, sigma, eval);
        FusionSet models;
        if (model_dir.empty()) {
            const LevelData train = make_level(ctx, split.train, sigma, *d.impl, modes);
            cache_stacks(ctx, sigma, train);
            models = train_fusion_models(ctx, sigma, train.samples, eval.samples, modes.size());
        } else {
            models = load_fusion_models(ctx, model_dir, sigma, modes.size());
        }
        const auto scores = models::evaluate_ensembles(eval.samples, ensemble_view(models), ctx.jobs);
        record_scores(sigma, eval, scores, aggregate, per_image);
        record_branch_psnr(sigma, eval, branches);
        write_heatmaps(ctx, sigma, eval, modes);

        const std::string tag = sigma_tag(sigma);
        std::vector<ImageGray> branch0;
        std::vector<ImageGray> average;
        for (const auto& s : eval.samples) {
            branch0.push_back(s.stack.images.front());
            average.push_back(manip::simple_average(s.stack));
        }
        write_psd(ctx, tag + "_clean", clean_of(eval.images));
        write_psd(ctx, tag + "_noisy", eval.noisy);
        write_psd(ctx, fmt::format("{}_mode{}", tag, modes.front().id()), branch0);
        write_psd(ctx, tag + "_simple_average", average);
        for (const auto& [v, model] : models) {
            std::vector<ImageGray> fused;
            for (const auto& s : eval.samples)
                fused.push_back(model->fuse(s.stack));
            write_psd(ctx, tag + "_" + models::to_string(v), fused);
        }
        note(ctx, fmt::format("sigma {}: scored {} images", sigma, eval.samples.size()));
    }
    write_file(ctx.out_dir / "ensemble.csv", aggregate.str());
    write_file(ctx.out_dir / "per_image.csv", per_image.str());
    write_file(ctx.out_dir / "branch_psnr.csv", branches.str());
}

void run_train_aux(const RunContext& ctx)
{
    const Split split = split_images(ctx, load_clean(ctx), true);
    const auto patches = patches_of(ctx, split.train);
    const auto heldout = clean_of(split.eval);

    models::AuxTrainConfig aux;
    aux.lambda = ctx.config.real("aux.lambda");
    aux.stability_window = ctx.config.count("aux.window", 1);
    aux.train = denoiser_train_config(ctx);
    aux.estimator.width = ctx.config.count("aux.estimator_width", 1);

    std::vector<models::StabilityRow> stability;
    std::ostringstream summary;
    summary << "config,final_psnr_db,stability,head_gap\n";
    const fs::path dir = ctx.out_dir / "aux";
    for (const auto& name : ctx.config.list("aux.configs")) {
        models::TinyDenoiser denoiser(tiny_config(ctx), aux.train.seed);
        models::AuxTrainResult result;
        if (name == "baseline") {
            result.history = models::train_denoiser(denoiser, patches, heldout, aux.train);
        } else {
            aux.mode = models::parse_aux_mode(name);
            aux.validate();
            if (aux.mode == models::AuxMode::image_learning) {
                result = models::train_image_learning_aux(denoiser, patches, heldout, aux);
            } else {
                models::ErrorEstimator estimator(aux.estimator, derive_seed(ctx.seed(), "estimator"));
                result = models::train_with_auxiliary_loss(denoiser, estimator, patches, heldout, aux);
                nn::save_params(dir / (name + "_estimator.params"), estimator.params());
                std::ostringstream est;
                est << "epoch,estimator_loss\n";
                for (std::size_t e = 0; e < result.estimator_loss.size(); ++e)
                    est << fmt::format("{},{:.9e}\n", e + 1, result.estimator_loss[e]);
                write_file(dir / (name + "_estimator_loss.csv"), est.str());
            }
        }
        fs::create_directories(dir);
        nn::save_params(dir / (name + ".params"), denoiser.params());
        std::ostringstream csv;
        models::write_history_csv(csv, result.history);
        write_file(dir / (name + "_history.csv"), csv.str());

        const std::size_t window = std::min(aux.stability_window, result.history.size());
        const double score = models::psnr_stability(result.history, window);
        stability.push_back({name, window, score});
        summary << fmt::format("{},{},{:.9e},{}\n", name, result.history.back().psnr.to_string(), score,
                               result.head_gap ? fmt::format("{:.9e}", *result.head_gap) : std::string());
        note(ctx, fmt::format("aux {}: final {} dB, stability {:.4f}", name, result.history.back().psnr.to_string(),
                              score));
    }
    std::ostringstream csv;
    models::write_stability_csv(csv, stability);
    write_file(ctx.out_dir / "stability.csv", csv.str());
    write_file(ctx.out_dir / "aux_summary.csv", summary.str());
}

void run_psd(const RunContext& ctx)
{
    const Split split = split_images(ctx, load_clean(ctx), false);
    write_psd(ctx, "clean", clean_of(split.eval));
    const std::string kind = ctx.config.text("denoiser.kind");
    const bool with_denoiser = kind != "tiny" || !ctx.config.text("denoiser.model").empty();
    for (double sigma : noise_levels(ctx)) {
        std::vector<ImageGray> noisy;
        for (const auto& img : split.eval)
            noisy.push_back(noisy_copy(img, sigma, ctx.seed()));
        write_psd(ctx, sigma_tag(sigma) + "_noisy", noisy);
        if (with_denoiser) {
            const LoadedDenoiser d = make_denoiser(ctx, sigma);
            const std::size_t jobs = d.impl->parallel_safe() ? ctx.jobs : 1;
            const auto denoised =
                parallel_map(noisy.size(), jobs, [&](std::size_t i) { return d.impl->denoise(noisy[i]); });
            write_psd(ctx, sigma_tag(sigma) + "_denoised", denoised);
        }
    }
}

void run_heatmap(const RunContext& ctx)
{
    const Split split = split_images(ctx, load_clean(ctx), false);
    const auto modes = configured_modes(ctx);
    for (double sigma : noise_levels(ctx)) {
        const LoadedDenoiser d = make_denoiser(ctx, sigma);
        const LevelData level = make_level(ctx, split.eval, sigma, *d.impl, modes);
        write_heatmaps(ctx, sigma, level, modes);
    }
}

} // namespace mfuse::cli
