#pragma once

#include "mfuse/nn/tensor.hpp"

#include <span>
#include <vector>

namespace mfuse::nn {

/// Same-padded 2-D cross-correlation. `weight` is (Cout, Cin, K, K) with odd
/// K; `bias` is (1, Cout, 1, 1) or undefined. Output is (B, Cout, H, W).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Affine map on the flattened per-sample features. `weight` is
/// (Out, In, 1, 1), `bias` is (1, Out, 1, 1). Output is (B, Out, 1, 1).
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

enum class BatchNormMode {
    train,            ///< batch statistics, running statistics updated
    train_keep_stats, ///< batch statistics, running statistics untouched
    eval,             ///< running statistics
};

/// Per-channel batch mean and unbiased variance, reported by batch_norm.
struct BatchMoments {
    std::vector<double> mean;
    std::vector<double> unbiased_var;
};

/// Per-channel normalization over (B, H, W) with affine gamma/beta of shape
/// (1, C, 1, 1). Normalizes with batch statistics when `use_batch_stats`,
/// otherwise with the supplied running statistics. When `moments` is given
/// and batch statistics are used, the batch moments are written to it.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, std::span<const double> running_mean,
                  std::span<const double> running_var, bool use_batch_stats, double eps,
                  BatchMoments* moments = nullptr);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// Softmax across the channel axis at every (b, h, w).
Tensor softmax_channels(const Tensor& x);

/// Mean over H x W: (B, C, H, W) -> (B, C, 1, 1).
Tensor global_avg_pool(const Tensor& x);

/// Concatenation along channels; all inputs share B, H, W.
Tensor concat_channels(std::span<const Tensor> parts);

/// out(b, 0, h, w) = x0 + sum_n w(b, n, .) * (x_n - x0), which equals
/// sum_n w_n x_n whenever the weights sum to 1 and reproduces x0 exactly
/// when all channels agree. `weights` is (B, N, H, W) or (B, N, 1, 1).
Tensor convex_combine(const Tensor& weights, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor square(const Tensor& a);
/// Subgradient 0 at 0.
Tensor abs(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// mean((pred - target)^2); gradients flow into both arguments.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

} // namespace mfuse::nn
