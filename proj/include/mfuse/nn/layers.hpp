#pragma once

#include "mfuse/nn/ops.hpp"
#include "mfuse/nn/tensor.hpp"
#include "mfuse/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mfuse::nn {

enum class LayerKind : std::uint8_t { conv2d = 0, batchnorm2d = 1, dense = 2 };

/// One named block of model state: a trainable tensor, or a plain buffer
/// such as batch-norm running statistics (`trainable` = false).
struct ParamEntry {
    std::string name;
    LayerKind kind;
    Shape shape;
    bool trainable = true;
    Tensor tensor;                        ///< set when trainable
    std::vector<double>* buffer = nullptr; ///< set when not trainable

    std::span<double> values() const
    {
        if (!trainable)
            return *buffer;
        Tensor handle = tensor; // shares storage
        return handle.values();
    }
};

using ParamList = std::vector<ParamEntry>;

/// Trainable entries only.
ParamList trainable(const ParamList& params);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& weight, std::size_t fan_in, std::size_t fan_out, CounterRng& rng);

struct Conv2d {
    Tensor weight; ///< (out, in, k, k)
    Tensor bias;   ///< (1, out, 1, 1)

    Conv2d() = default;
    /// Glorot-uniform weights, zero bias.
    Conv2d(std::size_t in, std::size_t out, std::size_t kernel, CounterRng& rng);

    std::size_t in_channels() const { return weight.shape().c; }
    std::size_t out_channels() const { return weight.shape().n; }

    Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias); }
    void zero_init();
    void append_params(ParamList& out, const std::string& prefix) const;
};

struct BatchNorm2d {
    Tensor gamma; ///< (1, C, 1, 1), init 1
    Tensor beta;  ///< (1, C, 1, 1), init 0
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm2d() = default;
    explicit BatchNorm2d(std::size_t channels);

    /// Running statistics move by `momentum` only in BatchNormMode::train.
    Tensor operator()(const Tensor& x, BatchNormMode mode);
    /// Eval mode.
    Tensor infer(const Tensor& x) const;
    void append_params(ParamList& out, const std::string& prefix);
};

struct Dense {
    Tensor weight; ///< (out, in, 1, 1)
    Tensor bias;   ///< (1, out, 1, 1)

    Dense() = default;
    Dense(std::size_t in, std::size_t out, CounterRng& rng);

    Tensor operator()(const Tensor& x) const { return dense(x, weight, bias); }
    void zero_init();
    void append_params(ParamList& out, const std::string& prefix) const;
};

/// Deep copy of every entry's values from `src` into `dst`; manifests must match.
void copy_values(const ParamList& src, const ParamList& dst);

/// Zeroes gradients of all trainable entries.
void zero_grads(const ParamList& params);

} // namespace mfuse::nn
