#pragma once

#include "mfuse/image.hpp"
#include "mfuse/manip/branch.hpp"
#include "mfuse/nn/adam.hpp"
#include "mfuse/nn/layers.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfuse::models {

enum class FusionVariant { dual, spatial_only, channel_only };

std::string to_string(FusionVariant variant);
FusionVariant parse_fusion_variant(const std::string& text);

struct FusionModelConfig {
    std::size_t n_branches = 13;
    std::size_t trunk_channels = 32;
    std::size_t se_hidden = 8;
    std::size_t kernel = 3;
    FusionVariant variant = FusionVariant::dual;
};

/// Spatial path: conv(N->32)+BN+relu, conv(32->32)+BN+relu, conv(32->N),
/// softmax over branches, per-pixel blend.
/// Channel path: global average -> dense(N->8)+relu -> dense(8->N) ->
/// softmax, one weight per branch.
/// Dual: both outputs stacked and merged by conv(2->1).
/// The layers producing attention logits start at zero, so an untrained model
/// reproduces the simple average; the merge conv starts as the 0.5/0.5
/// centre-tap average of the two paths.
class FusionModel {
public:
    FusionModel(FusionModelConfig config, std::uint64_t seed);

    const FusionModelConfig& config() const { return config_; }
    bool has_spatial() const { return config_.variant != FusionVariant::channel_only; }
    bool has_channel() const { return config_.variant != FusionVariant::spatial_only; }

    /// (B, N, H, W), summing to 1 over N.
    nn::Tensor spatial_weights(const nn::Tensor& x, nn::BatchNormMode mode);
    /// (B, N, 1, 1), summing to 1 over N.
    nn::Tensor channel_weights(const nn::Tensor& x) const;
    nn::Tensor spatial_output(const nn::Tensor& x, nn::BatchNormMode mode);
    nn::Tensor channel_output(const nn::Tensor& x) const;
    /// (B, 1, H, W), unclipped.
    nn::Tensor forward(const nn::Tensor& x, nn::BatchNormMode mode);

    /// Eval-mode forward without tape recording; unclipped.
    nn::Tensor infer(const nn::Tensor& x) const;
    nn::Tensor infer_spatial_weights(const nn::Tensor& x) const;
    /// Clipped fused image for one stack.
    ImageGray fuse(const manip::BranchStack& stack) const;
    std::vector<double> channel_weights_of(const manip::BranchStack& stack) const;

    nn::Conv2d& head() { return head_; }
    nn::Conv2d& spatial_logits() { return spatial_out_; }
    nn::Dense& channel_logits() { return excite_; }
    /// Only the layers used by the variant.
    nn::ParamList params();

private:
    void check_input(const nn::Tensor& x) const;
    template <class Bn>
    nn::Tensor spatial_logits_of(const nn::Tensor& x, Bn&& bn) const;
    nn::Tensor combine(const nn::Tensor& x, const nn::Tensor& spatial_w) const;

    FusionModelConfig config_;
    nn::Conv2d spatial_in_;
    nn::BatchNorm2d spatial_bn0_;
    nn::Conv2d spatial_mid_;
    nn::BatchNorm2d spatial_bn1_;
    nn::Conv2d spatial_out_;
    nn::Dense squeeze_;
    nn::Dense excite_;
    nn::Conv2d head_;
};

/// A branch stack and the clean image it should reconstruct.
struct FusionSample {
    manip::BranchStack stack;
    ImageGray clean;
};

struct FusionTrainConfig {
    int epochs = 100;
    std::size_t batch_size = 4;
    std::size_t patch_size = 50;
    std::size_t stride = 50;
    nn::StepDecaySchedule schedule = nn::fusion_schedule;
    std::uint64_t seed = 1;

    void validate() const;
};

struct FusionEpochRecord {
    int epoch = 0;
    Psnr psnr = Psnr::finite(0.0); ///< validation mean PSNR (clipped output)
    double train_loss = 0.0;       ///< mean batch MSE
    double lr = 0.0;
};

using FusionHistory = std::vector<FusionEpochRecord>;

/// CSV columns: epoch,psnr_db,train_loss,lr
void write_fusion_history_csv(std::ostream& out, const FusionHistory& history);

/// Patch-level MSE training with Adam and the fusion schedule. Patches are
/// aligned crops of stack and target; order is reshuffled every epoch from
/// the seed. When `validation` is empty the training samples are scored.
FusionHistory train_fusion(FusionModel& model, std::span<const FusionSample> train,
                           std::span<const FusionSample> validation, const FusionTrainConfig& config);

struct EnsembleModels {
    const FusionModel* spatial_only = nullptr;
    const FusionModel* channel_only = nullptr;
    const FusionModel* dual = nullptr;
};

struct StrategyScore {
    std::string strategy;
    Psnr mean_psnr = Psnr::finite(0.0);
    std::size_t n_images = 0;
};

struct EnsembleEvaluation {
    std::vector<std::string> strategies;
    std::vector<std::vector<Psnr>> per_image; ///< [image][strategy]
    std::vector<StrategyScore> aggregate;
};

/// Strategies, in order: branch0, simple_average, then each supplied model
/// (spatial_only, channel_only, dual_fusion). Images are scored on up to
/// `jobs` threads; results are ordered by input index.
EnsembleEvaluation evaluate_ensembles(std::span<const FusionSample> samples, const EnsembleModels& models,
                                      std::size_t jobs = 1);

/// CSV columns: noise_level,strategy,mean_psnr_db,n_images
void write_ensemble_csv(std::ostream& out, double noise_level, std::span<const StrategyScore> rows,
                        bool header = true);

/// Branch stack cache: "MFSTACK1", u32 N, H, W, N x u32 mode ids, u8
/// has_target, then N*H*W branch values and (if present) H*W target values,
/// all f64 little-endian.
void save_stack(const std::filesystem::path& path, const manip::BranchStack& stack, const ImageGray* target);
struct LoadedStack {
    manip::BranchStack stack;
    std::optional<ImageGray> target;
};
LoadedStack load_stack(const std::filesystem::path& path);

} // namespace mfuse::models
