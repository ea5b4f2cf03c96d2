#pragma once

#include "mfuse/image.hpp"
#include "mfuse/manip/branch.hpp"
#include "mfuse/nn/tensor.hpp"

#include <span>
#include <vector>

namespace mfuse::models {

/// (B, 1, H, W) from equal-size images.
nn::Tensor images_to_tensor(std::span<const ImageGray> images);
nn::Tensor image_to_tensor(const ImageGray& image);

/// (B, N, H, W) from stacks sharing N, H, W.
nn::Tensor stacks_to_tensor(std::span<const manip::BranchStack> stacks);

/// Channel `channel` of every batch item.
std::vector<ImageGray> tensor_to_images(const nn::Tensor& t, std::size_t channel = 0);

} // namespace mfuse::models
