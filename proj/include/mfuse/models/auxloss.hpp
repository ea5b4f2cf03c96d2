#pragma once

#include "mfuse/models/denoiser_training.hpp"
#include "mfuse/models/tiny_denoiser.hpp"
#include "mfuse/nn/adam.hpp"
#include "mfuse/nn/layers.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfuse::models {

struct ErrorEstimatorConfig {
    std::size_t blocks = 3;  ///< conv+BN+relu blocks
    std::size_t width = 32;
    std::size_t kernel = 3;
};

/// Fully convolutional per-pixel error predictor:
/// blocks x [conv+BN+relu], then conv(width->1)+relu. Output >= 0.
class ErrorEstimator {
public:
    ErrorEstimator(ErrorEstimatorConfig config, std::uint64_t seed);

    nn::Tensor forward(const nn::Tensor& noisy, nn::BatchNormMode mode);
    nn::Tensor infer(const nn::Tensor& noisy) const;
    nn::ParamList params();

private:
    ErrorEstimatorConfig config_;
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::BatchNorm2d> norms_;
    nn::Conv2d output_;
};

/// |denoised - clean| (p = 1) or (denoised - clean)^2 (p = 2) per pixel.
ImageGray estimator_target(const ImageGray& denoised, const ImageGray& clean, int p);
/// Differentiable in `denoised`.
nn::Tensor estimator_target(const nn::Tensor& denoised, const nn::Tensor& clean, int p);

enum class AuxMode { l1_estimator, l2_estimator, image_learning };

std::string to_string(AuxMode mode);
AuxMode parse_aux_mode(const std::string& text);

struct AuxTrainConfig {
    AuxMode mode = AuxMode::l1_estimator;
    double lambda = 0.1;
    std::size_t stability_window = 10;
    DenoiserTrainConfig train; ///< epochs, batches, schedule, seed
    ErrorEstimatorConfig estimator;

    void validate() const;
};

/// One batch of alternating updates between a denoiser and an estimator.
/// Call begin_batch(), then estimator_step(), then denoiser_step().
class EstimatorAuxStepper {
public:
    EstimatorAuxStepper(TinyDenoiser& denoiser, ErrorEstimator& estimator, const AuxTrainConfig& config);

    /// Runs the denoiser forward once (training mode) for this batch.
    void begin_batch(const NoisyBatch& batch);
    /// Fits the estimator to the detached error map; the denoiser is untouched.
    double estimator_step(double lr);
    /// MSE(denoised, clean) + lambda MSE(estimator(noisy), target(denoised));
    /// the estimator is evaluated without recording and is untouched.
    BatchLosses denoiser_step(double lr);

private:
    TinyDenoiser& denoiser_;
    ErrorEstimator& estimator_;
    int p_;
    double lambda_;
    nn::Adam denoiser_adam_;
    nn::Adam estimator_adam_;
    std::optional<NoisyBatch> batch_;
    nn::Tensor denoised_;
};

struct AuxTrainResult {
    TrainHistory history;
    std::vector<double> estimator_loss; ///< per-epoch mean estimator loss (estimator modes)
    std::optional<double> head_gap;     ///< image-learning: mean |(noisy - noise head) - image head| on held-out
};

/// Alternating estimator/denoiser training (L1 or L2 estimator modes).
AuxTrainResult train_with_auxiliary_loss(TinyDenoiser& denoiser, ErrorEstimator& estimator,
                                         std::span<const ImageGray> patches, std::span<const ImageGray> heldout_clean,
                                         const AuxTrainConfig& config);

/// Shared trunk with an extra image head conv(width->1) trained toward the
/// clean image: loss = MSE(denoised, clean) + lambda MSE(image_head, clean).
AuxTrainResult train_image_learning_aux(TinyDenoiser& denoiser, std::span<const ImageGray> patches,
                                        std::span<const ImageGray> heldout_clean, const AuxTrainConfig& config);

/// Trains only the estimator against a frozen denoiser (eval mode, unclipped
/// output). Returns the per-epoch mean estimator loss.
std::vector<double> train_estimator_frozen(ErrorEstimator& estimator, const TinyDenoiser& frozen,
                                           std::span<const ImageGray> patches, int p,
                                           const DenoiserTrainConfig& config);

/// Population standard deviation of the last `window` values.
double psnr_stability(std::span<const double> psnr_db, std::size_t window);
double psnr_stability(const TrainHistory& history, std::size_t window);

/// Full-window moving average: element i averages values[i .. i + window - 1].
/// Shorter inputs yield an empty result.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

struct StabilityRow {
    std::string config;
    std::size_t window;
    double score;
};

/// CSV columns: config,window,score
void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows);

} // namespace mfuse::models
