#include "mfuse/models/auxloss.hpp"

#include "mfuse/models/tensor_io.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mfuse::models {

ErrorEstimator::ErrorEstimator(ErrorEstimatorConfig config, std::uint64_t seed) : config_(config)
{
    if (config.blocks == 0 || config.width == 0)
        throw std::invalid_argument("error estimator needs at least one block and one channel");
    CounterRng rng(derive_seed(seed, "estimator.init"));
    std::size_t in = 1;
    for (std::size_t i = 0; i < config.blocks; ++i) {
        convs_.emplace_back(in, config.width, config.kernel, rng);
        norms_.emplace_back(config.width);
        in = config.width;
    }
    output_ = nn::Conv2d(config.width, 1, config.kernel, rng);
}

nn::Tensor ErrorEstimator::forward(const nn::Tensor& noisy, nn::BatchNormMode mode)
{
    nn::Tensor h = noisy;
    for (std::size_t i = 0; i < convs_.size(); ++i)
        h = nn::relu(norms_[i](convs_[i](h), mode));
    return nn::relu(output_(h));
}

nn::Tensor ErrorEstimator::infer(const nn::Tensor& noisy) const
{
    nn::NoGradGuard no_grad;
    nn::Tensor h = noisy;
    for (std::size_t i = 0; i < convs_.size(); ++i)
        h = nn::relu(norms_[i].infer(convs_[i](h)));
    return nn::relu(output_(h));
}

nn::ParamList ErrorEstimator::params()
{
    nn::ParamList out;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        convs_[i].append_params(out, fmt::format("block{}", i));
        norms_[i].append_params(out, fmt::format("block{}.bn", i));
    }
    output_.append_params(out, "output");
    return out;
}

namespace {

void check_p(int p)
{
    if (p != 1 && p != 2)
        throw std::invalid_argument(fmt::format("error order must be 1 or 2, got {}", p));
}

} // namespace

ImageGray estimator_target(const ImageGray& denoised, const ImageGray& clean, int p)
{
    check_p(p);
    if (!denoised.same_size(clean))
        throw std::invalid_argument(fmt::format("estimator target size mismatch ({}x{} vs {}x{})", denoised.height(),
                                                denoised.width(), clean.height(), clean.width()));
    std::vector<double> out(denoised.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = denoised.data()[i] - clean.data()[i];
        out[i] = p == 1 ? std::abs(d) : d * d;
    }
    return ImageGray(denoised.height(), denoised.width(), std::move(out));
}

nn::Tensor estimator_target(const nn::Tensor& denoised, const nn::Tensor& clean, int p)
{
    check_p(p);
    const nn::Tensor diff = nn::sub(denoised, clean);
    return p == 1 ? nn::abs(diff) : nn::square(diff);
}

std::string to_string(AuxMode mode)
{
    switch (mode) {
    case AuxMode::l1_estimator:
        return "l1";
    case AuxMode::l2_estimator:
        return "l2";
    case AuxMode::image_learning:
        return "image";
    }
    return "?";
}

AuxMode parse_aux_mode(const std::string& text)
{
    if (text == "l1")
        return AuxMode::l1_estimator;
    if (text == "l2")
        return AuxMode::l2_estimator;
    if (text == "image")
        return AuxMode::image_learning;
    throw std::invalid_argument(fmt::format("unknown aux mode '{}' (expected l1, l2 or image)", text));
}

void AuxTrainConfig::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument(fmt::format("aux weight must be finite and >= 0, got {}", lambda));
    if (stability_window == 0)
        throw std::invalid_argument("stability window must be >= 1");
    train.validate();
}

namespace {

int order_of(AuxMode mode)
{
    if (mode == AuxMode::l1_estimator)
        return 1;
    if (mode == AuxMode::l2_estimator)
        return 2;
    throw std::invalid_argument("image-learning mode has no estimator");
}

} // namespace

EstimatorAuxStepper::EstimatorAuxStepper(TinyDenoiser& denoiser, ErrorEstimator& estimator,
                                         const AuxTrainConfig& config)
    : denoiser_(denoiser),
      estimator_(estimator),
      p_(order_of(config.mode)),
      lambda_(config.lambda),
      denoiser_adam_(nn::trainable(denoiser.params())),
      estimator_adam_(nn::trainable(estimator.params()))
{
    config.validate();
}

void EstimatorAuxStepper::begin_batch(const NoisyBatch& batch)
{
    batch_ = batch;
    denoised_ = denoiser_.forward(batch.noisy, nn::BatchNormMode::train);
}

double EstimatorAuxStepper::estimator_step(double lr)
{
    if (!batch_)
        throw std::logic_error("begin_batch() must precede estimator_step()");
    const nn::Tensor target = estimator_target(denoised_.detached(), batch_->clean, p_);
    const nn::Tensor loss = nn::mse_loss(estimator_.forward(batch_->noisy, nn::BatchNormMode::train), target);
    loss.backward();
    estimator_adam_.step(lr);
    return loss.item();
}

BatchLosses EstimatorAuxStepper::denoiser_step(double lr)
{
    if (!batch_)
        throw std::logic_error("begin_batch() must precede denoiser_step()");
    nn::Tensor predicted;
    {
        nn::NoGradGuard no_grad;
        predicted = estimator_.forward(batch_->noisy, nn::BatchNormMode::train_keep_stats);
    }
    const nn::Tensor main = nn::mse_loss(denoised_, batch_->clean);
    const nn::Tensor aux = nn::mse_loss(predicted, estimator_target(denoised_, batch_->clean, p_));
    const nn::Tensor total = nn::add(main, nn::scale(aux, lambda_));
    total.backward();
    denoiser_adam_.step(lr);
    batch_.reset();
    return {main.item(), aux.item()};
}

AuxTrainResult train_with_auxiliary_loss(TinyDenoiser& denoiser, ErrorEstimator& estimator,
                                         std::span<const ImageGray> patches, std::span<const ImageGray> heldout_clean,
                                         const AuxTrainConfig& config)
{
    if (patches.empty())
        throw std::invalid_argument("aux training needs at least one patch");
    EstimatorAuxStepper stepper(denoiser, estimator, config);
    const auto fallback = patches.first(std::min<std::size_t>(8, patches.size()));
    const HeldOutSet heldout =
        make_heldout(heldout_clean.empty() ? fallback : heldout_clean, config.train.eval_sigma, config.train.seed);

    AuxTrainResult result;
    double est_sum = 0.0;
    std::size_t est_count = 0;
    std::size_t batches_seen = 0;
    const std::size_t per_epoch = (patches.size() + config.train.batch_size - 1) / config.train.batch_size;
    result.history = run_denoiser_epochs(denoiser, patches, heldout, config.train,
                                         [&](const NoisyBatch& batch, double lr) {
                                             stepper.begin_batch(batch);
                                             const double e = stepper.estimator_step(lr);
                                             if (!std::isfinite(e))
                                                 throw std::runtime_error(fmt::format(
                                                     "non-finite estimator loss at batch {}", batches_seen));
                                             est_sum += e;
                                             ++est_count;
                                             if (++batches_seen % per_epoch == 0) {
                                                 result.estimator_loss.push_back(est_sum /
                                                                                 static_cast<double>(est_count));
                                                 est_sum = 0.0;
                                                 est_count = 0;
                                             }
                                             return stepper.denoiser_step(lr);
                                         });
    return result;
}

AuxTrainResult train_image_learning_aux(TinyDenoiser& denoiser, std::span<const ImageGray> patches,
                                        std::span<const ImageGray> heldout_clean, const AuxTrainConfig& config)
{
    config.validate();
    if (config.mode != AuxMode::image_learning)
        throw std::invalid_argument("train_image_learning_aux needs image-learning mode");
    if (patches.empty())
        throw std::invalid_argument("aux training needs at least one patch");

    CounterRng head_rng(derive_seed(config.train.seed, "image_head.init"));
    nn::Conv2d head(denoiser.config().width, 1, denoiser.config().kernel, head_rng);
    nn::ParamList params = nn::trainable(denoiser.params());
    head.append_params(params, "image_head");
    nn::Adam adam(params);

    const auto fallback = patches.first(std::min<std::size_t>(8, patches.size()));
    const HeldOutSet heldout =
        make_heldout(heldout_clean.empty() ? fallback : heldout_clean, config.train.eval_sigma, config.train.seed);

    AuxTrainResult result;
    result.history =
        run_denoiser_epochs(denoiser, patches, heldout, config.train, [&](const NoisyBatch& batch, double lr) {
            const nn::Tensor h = denoiser.features(batch.noisy, nn::BatchNormMode::train);
            const nn::Tensor denoised = nn::sub(batch.noisy, denoiser.output_layer()(h));
            const nn::Tensor main = nn::mse_loss(denoised, batch.clean);
            const nn::Tensor aux = nn::mse_loss(head(h), batch.clean);
            const nn::Tensor total = nn::add(main, nn::scale(aux, config.lambda));
            total.backward();
            adam.step(lr);
            return BatchLosses{main.item(), aux.item()};
        });

    // Agreement between the two heads on the held-out noisy images.
    double gap = 0.0;
    std::size_t count = 0;
    for (const auto& noisy : heldout.noisy) {
        nn::NoGradGuard no_grad;
        const nn::Tensor x = image_to_tensor(noisy);
        const nn::Tensor residual = denoiser.infer(x);
        // Eval-mode trunk features for the image head.
        const nn::Tensor h = denoiser.features(x, nn::BatchNormMode::eval);
        const nn::Tensor image = head(h);
        for (std::size_t i = 0; i < residual.numel(); ++i)
            gap += std::abs(residual.values()[i] - image.values()[i]);
        count += residual.numel();
    }
    result.head_gap = gap / static_cast<double>(count);
    return result;
}

std::vector<double> train_estimator_frozen(ErrorEstimator& estimator, const TinyDenoiser& frozen,
                                           std::span<const ImageGray> patches, int p,
                                           const DenoiserTrainConfig& config)
{
    check_p(p);
    NoisyBatchSampler sampler(patches, config);
    nn::Adam adam(nn::trainable(estimator.params()));
    std::vector<double> losses;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = config.schedule.at(epoch);
        sampler.start_epoch(epoch);
        double sum = 0.0;
        for (std::size_t b = 0; b < sampler.batches_per_epoch(); ++b) {
            const NoisyBatch batch = sampler.batch(b);
            const nn::Tensor target = estimator_target(frozen.infer(batch.noisy), batch.clean, p);
            const nn::Tensor loss = nn::mse_loss(estimator.forward(batch.noisy, nn::BatchNormMode::train), target);
            loss.backward();
            adam.step(lr);
            if (!std::isfinite(loss.item()))
                throw std::runtime_error(fmt::format("non-finite estimator loss at epoch {} batch {}", epoch, b));
            sum += loss.item();
        }
        losses.push_back(sum / static_cast<double>(sampler.batches_per_epoch()));
    }
    return losses;
}

double psnr_stability(std::span<const double> psnr_db, std::size_t window)
{
    if (window == 0 || psnr_db.size() < window)
        throw std::invalid_argument(
            fmt::format("stability needs at least {} epochs, history has {}", window, psnr_db.size()));
    const auto tail = psnr_db.last(window);
    const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(window);
    double ss = 0.0;
    for (double v : tail)
        ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(window));
}

double psnr_stability(const TrainHistory& history, std::size_t window)
{
    std::vector<double> db;
    db.reserve(history.size());
    for (const auto& r : history) {
        if (r.psnr.is_infinite())
            throw std::invalid_argument(fmt::format("epoch {} has infinite PSNR", r.epoch));
        db.push_back(r.psnr.db());
    }
    return psnr_stability(db, window);
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window)
{
    if (window == 0)
        throw std::invalid_argument("moving average window must be >= 1");
    std::vector<double> out;
    if (values.size() < window)
        return out;
    for (std::size_t i = 0; i + window <= values.size(); ++i)
        out.push_back(std::accumulate(values.begin() + i, values.begin() + i + window, 0.0) /
                      static_cast<double>(window));
    return out;
}

void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows)
{
    out << "config,window,score\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{:.9e}\n", r.config, r.window, r.score);
}

} // namespace mfuse::models
