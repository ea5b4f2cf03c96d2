#include "mfuse/models/fusion.hpp"

#include "mfuse/binary_io.hpp"
#include "mfuse/models/tensor_io.hpp"
#include "mfuse/parallel.hpp"

#include <array>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mfuse::models {

std::string to_string(FusionVariant variant)
{
    switch (variant) {
    case FusionVariant::dual:
        return "dual_fusion";
    case FusionVariant::spatial_only:
        return "spatial_only";
    case FusionVariant::channel_only:
        return "channel_only";
    }
    return "?";
}

FusionVariant parse_fusion_variant(const std::string& text)
{
    if (text == "dual" || text == "dual_fusion")
        return FusionVariant::dual;
    if (text == "spatial" || text == "spatial_only")
        return FusionVariant::spatial_only;
    if (text == "channel" || text == "channel_only")
        return FusionVariant::channel_only;
    throw std::invalid_argument(fmt::format("unknown fusion variant '{}' (expected dual, spatial or channel)", text));
}

FusionModel::FusionModel(FusionModelConfig config, std::uint64_t seed) : config_(config)
{
    if (config.n_branches < 1 || config.trunk_channels == 0 || config.se_hidden == 0)
        throw std::invalid_argument("fusion model needs at least one branch, trunk channel and hidden unit");
    CounterRng rng(derive_seed(seed, "fusion.init"));
    const std::size_t n = config.n_branches;
    const std::size_t t = config.trunk_channels;
    spatial_in_ = nn::Conv2d(n, t, config.kernel, rng);
    spatial_bn0_ = nn::BatchNorm2d(t);
    spatial_mid_ = nn::Conv2d(t, t, config.kernel, rng);
    spatial_bn1_ = nn::BatchNorm2d(t);
    spatial_out_ = nn::Conv2d(t, n, config.kernel, rng);
    spatial_out_.zero_init();
    squeeze_ = nn::Dense(n, config.se_hidden, rng);
    excite_ = nn::Dense(config.se_hidden, n, rng);
    excite_.zero_init();

    head_ = nn::Conv2d(2, 1, config.kernel, rng);
    head_.zero_init();
    const std::size_t centre = config.kernel / 2;
    const std::size_t kk = config.kernel * config.kernel;
    head_.weight.values()[0 * kk + centre * config.kernel + centre] = 0.5;
    head_.weight.values()[1 * kk + centre * config.kernel + centre] = 0.5;
}

void FusionModel::check_input(const nn::Tensor& x) const
{
    if (x.shape().c != config_.n_branches)
        throw std::invalid_argument(
            fmt::format("fusion model expects {} branches, got input {}", config_.n_branches, x.shape().str()));
}

template <class Bn>
nn::Tensor FusionModel::spatial_logits_of(const nn::Tensor& x, Bn&& bn) const
{
    nn::Tensor h = nn::relu(bn(0, spatial_in_(x)));
    h = nn::relu(bn(1, spatial_mid_(h)));
    return spatial_out_(h);
}

nn::Tensor FusionModel::spatial_weights(const nn::Tensor& x, nn::BatchNormMode mode)
{
    check_input(x);
    return nn::softmax_channels(spatial_logits_of(x, [&](int i, const nn::Tensor& t) {
        return i == 0 ? spatial_bn0_(t, mode) : spatial_bn1_(t, mode);
    }));
}

nn::Tensor FusionModel::infer_spatial_weights(const nn::Tensor& x) const
{
    check_input(x);
    nn::NoGradGuard no_grad;
    return nn::softmax_channels(spatial_logits_of(x, [&](int i, const nn::Tensor& t) {
        return i == 0 ? spatial_bn0_.infer(t) : spatial_bn1_.infer(t);
    }));
}

nn::Tensor FusionModel::channel_weights(const nn::Tensor& x) const
{
    check_input(x);
    return nn::softmax_channels(excite_(nn::relu(squeeze_(nn::global_avg_pool(x)))));
}

nn::Tensor FusionModel::spatial_output(const nn::Tensor& x, nn::BatchNormMode mode)
{
    return nn::convex_combine(spatial_weights(x, mode), x);
}

nn::Tensor FusionModel::channel_output(const nn::Tensor& x) const
{
    return nn::convex_combine(channel_weights(x), x);
}

nn::Tensor FusionModel::combine(const nn::Tensor& x, const nn::Tensor& spatial_w) const
{
    switch (config_.variant) {
    case FusionVariant::spatial_only:
        return nn::convex_combine(spatial_w, x);
    case FusionVariant::channel_only:
        return channel_output(x);
    case FusionVariant::dual:
        break;
    }
    const std::array<nn::Tensor, 2> parts{nn::convex_combine(spatial_w, x), channel_output(x)};
    return head_(nn::concat_channels(parts));
}

nn::Tensor FusionModel::forward(const nn::Tensor& x, nn::BatchNormMode mode)
{
    check_input(x);
    return combine(x, has_spatial() ? spatial_weights(x, mode) : nn::Tensor());
}

nn::Tensor FusionModel::infer(const nn::Tensor& x) const
{
    check_input(x);
    nn::NoGradGuard no_grad;
    return combine(x, has_spatial() ? infer_spatial_weights(x) : nn::Tensor());
}

ImageGray FusionModel::fuse(const manip::BranchStack& stack) const
{
    return clip_unit(tensor_to_images(infer(stacks_to_tensor(std::span(&stack, 1)))).front());
}

std::vector<double> FusionModel::channel_weights_of(const manip::BranchStack& stack) const
{
    nn::NoGradGuard no_grad;
    const nn::Tensor w = channel_weights(stacks_to_tensor(std::span(&stack, 1)));
    return {w.values().begin(), w.values().end()};
}

nn::ParamList FusionModel::params()
{
    nn::ParamList out;
    if (has_spatial()) {
        spatial_in_.append_params(out, "spatial.conv0");
        spatial_bn0_.append_params(out, "spatial.bn0");
        spatial_mid_.append_params(out, "spatial.conv1");
        spatial_bn1_.append_params(out, "spatial.bn1");
        spatial_out_.append_params(out, "spatial.logits");
    }
    if (has_channel()) {
        squeeze_.append_params(out, "channel.squeeze");
        excite_.append_params(out, "channel.excite");
    }
    if (config_.variant == FusionVariant::dual)
        head_.append_params(out, "head");
    return out;
}

void FusionTrainConfig::validate() const
{
    if (epochs < 1)
        throw std::invalid_argument(fmt::format("epochs must be >= 1, got {}", epochs));
    if (batch_size == 0 || patch_size == 0 || stride == 0)
        throw std::invalid_argument("batch size, patch size and stride must be >= 1");
}

void write_fusion_history_csv(std::ostream& out, const FusionHistory& history)
{
    out << "epoch,psnr_db,train_loss,lr\n";
    for (const auto& r : history)
        out << fmt::format("{},{},{:.9e},{:.9e}\n", r.epoch, r.psnr.to_string(), r.train_loss, r.lr);
}

namespace {

void check_samples(std::span<const FusionSample> samples, std::size_t n_branches, const char* what)
{
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        s.stack.validate();
        if (s.stack.size() != n_branches)
            throw std::invalid_argument(
                fmt::format("{} sample {} has {} branches, model expects {}", what, i, s.stack.size(), n_branches));
        if (s.clean.height() != s.stack.height() || s.clean.width() != s.stack.width())
            throw std::invalid_argument(fmt::format("{} sample {} target size differs from its stack", what, i));
    }
}

Psnr mean_fused_psnr(const FusionModel& model, std::span<const FusionSample> samples)
{
    std::vector<Psnr> scores;
    scores.reserve(samples.size());
    for (const auto& s : samples)
        scores.push_back(psnr(s.clean, model.fuse(s.stack)));
    return mean_psnr(scores);
}

} // namespace

FusionHistory train_fusion(FusionModel& model, std::span<const FusionSample> train,
                           std::span<const FusionSample> validation, const FusionTrainConfig& config)
{
    config.validate();
    if (train.empty())
        throw std::invalid_argument("fusion training needs at least one sample");
    check_samples(train, model.config().n_branches, "training");
    check_samples(validation, model.config().n_branches, "validation");

    std::vector<manip::BranchStack> patch_stacks;
    std::vector<ImageGray> patch_targets;
    for (const auto& s : train) {
        const PatchGrid grid = extract_patches(s.clean, config.patch_size, config.stride);
        for (std::size_t i = 0; i < grid.patches.size(); ++i) {
            patch_stacks.push_back(s.stack.crop(grid.origins[i], config.patch_size, config.patch_size));
            patch_targets.push_back(grid.patches[i]);
        }
    }
    if (patch_stacks.empty())
        throw std::invalid_argument(
            fmt::format("no {}x{} patches fit in the training images", config.patch_size, config.patch_size));

    const auto scored = validation.empty() ? train : validation;
    const std::uint64_t shuffle_seed = derive_seed(config.seed, "fusion.shuffle");
    nn::Adam adam(nn::trainable(model.params()));
    std::vector<std::size_t> order(patch_stacks.size());
    FusionHistory history;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = config.schedule.at(epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng rng(derive_seed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
            const std::size_t last = std::min(first + config.batch_size, order.size());
            std::vector<manip::BranchStack> stacks;
            std::vector<ImageGray> targets;
            for (std::size_t k = first; k < last; ++k) {
                stacks.push_back(patch_stacks[order[k]]);
                targets.push_back(patch_targets[order[k]]);
            }
            const nn::Tensor loss = nn::mse_loss(model.forward(stacks_to_tensor(stacks), nn::BatchNormMode::train),
                                                 images_to_tensor(targets));
            if (!std::isfinite(loss.item()))
                throw std::runtime_error(fmt::format("non-finite fusion loss at epoch {} batch {}", epoch, n_batches));
            loss.backward();
            adam.step(lr);
            loss_sum += loss.item();
            ++n_batches;
        }
        FusionEpochRecord rec;
        rec.epoch = epoch;
        rec.psnr = mean_fused_psnr(model, scored);
        rec.train_loss = loss_sum / static_cast<double>(n_batches);
        rec.lr = lr;
        history.push_back(rec);
    }
    return history;
}

EnsembleEvaluation evaluate_ensembles(std::span<const FusionSample> samples, const EnsembleModels& models,
                                      std::size_t jobs)
{
    EnsembleEvaluation eval;
    eval.strategies = {"branch0", "simple_average"};
    std::vector<const FusionModel*> fused;
    for (auto [name, model] : {std::pair{"spatial_only", models.spatial_only},
                               std::pair{"channel_only", models.channel_only}, std::pair{"dual_fusion", models.dual}})
        if (model != nullptr) {
            eval.strategies.emplace_back(name);
            fused.push_back(model);
        }

    eval.per_image = parallel_map(samples.size(), jobs, [&](std::size_t i) {
        const FusionSample& s = samples[i];
        s.stack.validate();
        const auto it = std::find_if(s.stack.modes.begin(), s.stack.modes.end(),
                                     [](const manip::ManipulationMode& m) { return m.id() == 0; });
        if (it == s.stack.modes.end())
            throw std::invalid_argument(fmt::format("sample {} has no mode-0 branch", i));
        std::vector<Psnr> row;
        row.push_back(psnr(s.clean, s.stack.images[static_cast<std::size_t>(it - s.stack.modes.begin())]));
        row.push_back(psnr(s.clean, manip::simple_average(s.stack)));
        for (const FusionModel* m : fused)
            row.push_back(psnr(s.clean, m->fuse(s.stack)));
        return row;
    });

    for (std::size_t k = 0; k < eval.strategies.size(); ++k) {
        std::vector<Psnr> column;
        for (const auto& row : eval.per_image)
            column.push_back(row[k]);
        StrategyScore score;
        score.strategy = eval.strategies[k];
        score.mean_psnr = column.empty() ? Psnr::finite(0.0) : mean_psnr(column);
        score.n_images = column.size();
        eval.aggregate.push_back(score);
    }
    return eval;
}

void write_ensemble_csv(std::ostream& out, double noise_level, std::span<const StrategyScore> rows, bool header)
{
    if (header)
        out << "noise_level,strategy,mean_psnr_db,n_images\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{}\n", noise_level, r.strategy, r.mean_psnr.to_string(), r.n_images);
}

namespace {

constexpr std::array<char, 8> stack_magic{'M', 'F', 'S', 'T', 'A', 'C', 'K', '1'};

} // namespace

void save_stack(const std::filesystem::path& path, const manip::BranchStack& stack, const ImageGray* target)
{
    stack.validate();
    if (target != nullptr && (target->height() != stack.height() || target->width() != stack.width()))
        throw std::invalid_argument("stack target size differs from the branches");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write stack file {}", path.string()));
    out.write(stack_magic.data(), stack_magic.size());
    binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.size()));
    binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.height()));
    binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.width()));
    for (const auto& m : stack.modes)
        binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.id()));
    binary::put_le<std::uint8_t>(out, target != nullptr ? 1 : 0);
    for (const auto& img : stack.images)
        for (double v : img.data())
            binary::put_f64(out, v);
    if (target != nullptr)
        for (double v : target->data())
            binary::put_f64(out, v);
    if (!out)
        throw std::runtime_error(fmt::format("failed writing stack file {}", path.string()));
}

LoadedStack load_stack(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open stack file {}", path.string()));
    try {
        std::array<char, 8> magic{};
        in.read(magic.data(), magic.size());
        if (!in || magic != stack_magic)
            throw std::runtime_error("bad magic");
        const auto n = binary::get_le<std::uint32_t>(in);
        const auto h = binary::get_le<std::uint32_t>(in);
        const auto w = binary::get_le<std::uint32_t>(in);
        LoadedStack loaded;
        for (std::uint32_t i = 0; i < n; ++i)
            loaded.stack.modes.push_back(manip::ManipulationMode::from_id(static_cast<int>(binary::get_le<std::uint32_t>(in))));
        const auto has_target = binary::get_le<std::uint8_t>(in);
        auto read_image = [&] {
            std::vector<double> px(static_cast<std::size_t>(h) * w);
            for (double& v : px)
                v = binary::get_f64(in);
            return ImageGray(h, w, std::move(px));
        };
        for (std::uint32_t i = 0; i < n; ++i)
            loaded.stack.images.push_back(read_image());
        if (has_target != 0)
            loaded.target = read_image();
        loaded.stack.validate();
        return loaded;
    } catch (const std::exception& e) {
        throw std::runtime_error(fmt::format("stack file {}: {}", path.string(), e.what()));
    }
}

} // namespace mfuse::models
