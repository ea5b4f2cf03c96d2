#pragma once

#include "mfuse/image.hpp"
#include "mfuse/models/tiny_denoiser.hpp"
#include "mfuse/nn/adam.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace mfuse::models {

struct DenoiserTrainConfig {
    int epochs = 50;
    std::size_t batch_size = 8;
    double sigma_min = 0.0; ///< blind range, 0..255 scale
    double sigma_max = 55.0;
    bool augment = true;      ///< random dihedral action per patch
    double eval_sigma = 25.0; ///< held-out noise level
    nn::StepDecaySchedule schedule = nn::denoiser_schedule;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    Psnr psnr = Psnr::finite(0.0); ///< held-out mean PSNR after the epoch
    double denoiser_loss = 0.0; ///< mean main-objective loss over batches
    double aux_loss = 0.0;      ///< mean auxiliary loss (0 for plain training)
    double lr = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

/// CSV columns: epoch,psnr_db,denoiser_loss,aux_loss,lr
void write_history_csv(std::ostream& out, const TrainHistory& history);

struct NoisyBatch {
    nn::Tensor noisy; ///< (B, 1, P, P), unclipped
    nn::Tensor clean;
};

/// Deterministic source of training batches. Each epoch visits every patch
/// once in a seeded order; patch k of epoch e gets its own augmentation,
/// noise level and noise field keyed by (seed, e, k).
class NoisyBatchSampler {
public:
    NoisyBatchSampler(std::span<const ImageGray> patches, const DenoiserTrainConfig& config);

    std::size_t batches_per_epoch() const;
    /// Must be called before batch(); fixes the visiting order for `epoch`.
    void start_epoch(int epoch);
    NoisyBatch batch(std::size_t index) const;

private:
    std::vector<ImageGray> patches_;
    DenoiserTrainConfig config_;
    std::uint64_t data_seed_;
    int epoch_ = 0;
    std::vector<std::size_t> order_;
};

/// Fixed clipped noisy/clean pairs used for per-epoch PSNR.
struct HeldOutSet {
    std::vector<ImageGray> clean;
    std::vector<ImageGray> noisy;
};

HeldOutSet make_heldout(std::span<const ImageGray> clean, double sigma, std::uint64_t seed);

/// Mean PSNR of the model's clipped output on the held-out pairs.
Psnr heldout_psnr(const TinyDenoiser& model, const HeldOutSet& set);

struct BatchLosses {
    double main = 0.0;
    double aux = 0.0;
};

/// Shared epoch loop. `step` performs one optimization step on a batch at the
/// given learning rate. Non-finite losses abort with epoch/batch context.
using BatchStep = std::function<BatchLosses(const NoisyBatch&, double lr)>;
TrainHistory run_denoiser_epochs(const TinyDenoiser& model, std::span<const ImageGray> patches, const HeldOutSet& heldout,
                                 const DenoiserTrainConfig& config, const BatchStep& step);

/// Blind residual training: per patch sigma ~ U[sigma_min, sigma_max], unclipped
/// AWGN, MSE(noisy - net(noisy), clean), Adam with the step schedule. When
/// `heldout_clean` is empty the first (up to) 8 training patches are used.
TrainHistory train_denoiser(TinyDenoiser& model, std::span<const ImageGray> patches,
                            std::span<const ImageGray> heldout_clean, const DenoiserTrainConfig& config);

} // namespace mfuse::models
