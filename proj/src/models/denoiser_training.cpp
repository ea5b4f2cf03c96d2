#include "mfuse/models/denoiser_training.hpp"

#include "mfuse/manip/dihedral.hpp"
#include "mfuse/manip/mode.hpp"
#include "mfuse/models/tensor_io.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mfuse::models {

void DenoiserTrainConfig::validate() const
{
    if (epochs < 1)
        throw std::invalid_argument(fmt::format("epochs must be >= 1, got {}", epochs));
    if (batch_size == 0)
        throw std::invalid_argument("batch size must be >= 1");
    NoiseLevel lo(sigma_min);
    NoiseLevel hi(sigma_max);
    if (lo.sigma() > hi.sigma())
        throw std::invalid_argument(fmt::format("noise range [{}, {}] is empty", sigma_min, sigma_max));
    NoiseLevel eval(eval_sigma);
}

void write_history_csv(std::ostream& out, const TrainHistory& history)
{
    out << "epoch,psnr_db,denoiser_loss,aux_loss,lr\n";
    for (const auto& r : history)
        out << fmt::format("{},{},{:.9e},{:.9e},{:.9e}\n", r.epoch, r.psnr.to_string(), r.denoiser_loss, r.aux_loss,
                           r.lr);
}

NoisyBatchSampler::NoisyBatchSampler(std::span<const ImageGray> patches, const DenoiserTrainConfig& config)
    : patches_(patches.begin(), patches.end()), config_(config), data_seed_(derive_seed(config.seed, "denoiser.data"))
{
    if (patches_.empty())
        throw std::invalid_argument("denoiser training needs at least one patch");
    for (const auto& p : patches_)
        if (!p.same_size(patches_.front()))
            throw std::invalid_argument("training patches must share one size");
    config_.validate();
}

std::size_t NoisyBatchSampler::batches_per_epoch() const
{
    return (patches_.size() + config_.batch_size - 1) / config_.batch_size;
}

void NoisyBatchSampler::start_epoch(int epoch)
{
    epoch_ = epoch;
    order_.resize(patches_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    CounterRng rng(derive_seed(derive_seed(data_seed_, "shuffle"), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order_.size(); i > 1; --i)
        std::swap(order_[i - 1], order_[rng.below(i)]);
}

NoisyBatch NoisyBatchSampler::batch(std::size_t index) const
{
    if (order_.empty())
        throw std::logic_error("start_epoch() must precede batch()");
    const std::size_t first = index * config_.batch_size;
    const std::size_t last = std::min(first + config_.batch_size, order_.size());
    if (first >= last)
        throw std::out_of_range(fmt::format("batch {} out of range", index));

    const std::uint64_t epoch_seed = derive_seed(data_seed_, static_cast<std::uint64_t>(epoch_));
    std::vector<ImageGray> clean;
    std::vector<ImageGray> noisy;
    for (std::size_t k = first; k < last; ++k) {
        const std::uint64_t key = derive_seed(epoch_seed, static_cast<std::uint64_t>(k));
        CounterRng rng(key);
        ImageGray patch = patches_[order_[k]];
        if (config_.augment) {
            const auto mode = manip::ManipulationMode::from_id(static_cast<int>(rng.below(8)));
            patch = manip::apply_dihedral(patch, mode);
        }
        const NoiseLevel sigma(rng.uniform(config_.sigma_min, config_.sigma_max));
        noisy.push_back(add_awgn(patch, sigma, derive_seed(key, "noise")));
        clean.push_back(std::move(patch));
    }
    return {images_to_tensor(noisy), images_to_tensor(clean)};
}

HeldOutSet make_heldout(std::span<const ImageGray> clean, double sigma, std::uint64_t seed)
{
    HeldOutSet set;
    const NoiseLevel level(sigma);
    const std::uint64_t base = derive_seed(seed, "heldout");
    for (std::size_t i = 0; i < clean.size(); ++i) {
        set.clean.push_back(clean[i]);
        set.noisy.push_back(clip_unit(add_awgn(clean[i], level, derive_seed(base, static_cast<std::uint64_t>(i)))));
    }
    return set;
}

Psnr heldout_psnr(const TinyDenoiser& model, const HeldOutSet& set)
{
    std::vector<Psnr> scores;
    scores.reserve(set.clean.size());
    for (std::size_t i = 0; i < set.clean.size(); ++i)
        scores.push_back(psnr(set.clean[i], model.denoise(set.noisy[i])));
    return mean_psnr(scores);
}

TrainHistory run_denoiser_epochs(const TinyDenoiser& model, std::span<const ImageGray> patches, const HeldOutSet& heldout,
                                 const DenoiserTrainConfig& config, const BatchStep& step)
{
    if (heldout.clean.empty())
        throw std::invalid_argument("held-out set is empty");
    NoisyBatchSampler sampler(patches, config);
    TrainHistory history;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = config.schedule.at(epoch);
        sampler.start_epoch(epoch);
        const std::size_t n_batches = sampler.batches_per_epoch();
        double main_sum = 0.0;
        double aux_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const BatchLosses losses = step(sampler.batch(b), lr);
            if (!std::isfinite(losses.main) || !std::isfinite(losses.aux))
                throw std::runtime_error(
                    fmt::format("non-finite loss at epoch {} batch {} (main {}, aux {})", epoch, b, losses.main,
                                losses.aux));
            main_sum += losses.main;
            aux_sum += losses.aux;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.psnr = heldout_psnr(model, heldout);
        rec.denoiser_loss = main_sum / static_cast<double>(n_batches);
        rec.aux_loss = aux_sum / static_cast<double>(n_batches);
        rec.lr = lr;
        history.push_back(rec);
    }
    return history;
}

TrainHistory train_denoiser(TinyDenoiser& model, std::span<const ImageGray> patches,
                            std::span<const ImageGray> heldout_clean, const DenoiserTrainConfig& config)
{
    if (patches.empty())
        throw std::invalid_argument("denoiser training needs at least one patch");
    const auto fallback = patches.first(std::min<std::size_t>(8, patches.size()));
    const HeldOutSet heldout =
        make_heldout(heldout_clean.empty() ? fallback : heldout_clean, config.eval_sigma, config.seed);
    nn::Adam adam(nn::trainable(model.params()));
    return run_denoiser_epochs(model, patches, heldout, config, [&](const NoisyBatch& batch, double lr) {
        const nn::Tensor denoised = model.forward(batch.noisy, nn::BatchNormMode::train);
        const nn::Tensor loss = nn::mse_loss(denoised, batch.clean);
        loss.backward();
        adam.step(lr);
        return BatchLosses{loss.item(), 0.0};
    });
}

} // namespace mfuse::models
