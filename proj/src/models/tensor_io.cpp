#include "mfuse/models/tensor_io.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::models {

nn::Tensor images_to_tensor(std::span<const ImageGray> images)
{
    if (images.empty())
        throw std::invalid_argument("cannot build a tensor from zero images");
    const std::size_t h = images.front().height();
    const std::size_t w = images.front().width();
    std::vector<double> values;
    values.reserve(images.size() * h * w);
    for (const auto& img : images) {
        if (img.height() != h || img.width() != w)
            throw std::invalid_argument(
                fmt::format("batch images must share one size ({}x{} vs {}x{})", img.height(), img.width(), h, w));
        values.insert(values.end(), img.data().begin(), img.data().end());
    }
    return nn::Tensor(nn::Shape{images.size(), 1, h, w}, std::move(values));
}

nn::Tensor image_to_tensor(const ImageGray& image)
{
    return images_to_tensor(std::span<const ImageGray>(&image, 1));
}

nn::Tensor stacks_to_tensor(std::span<const manip::BranchStack> stacks)
{
    if (stacks.empty())
        throw std::invalid_argument("cannot build a tensor from zero stacks");
    const std::size_t n = stacks.front().size();
    const std::size_t h = stacks.front().height();
    const std::size_t w = stacks.front().width();
    std::vector<double> values;
    values.reserve(stacks.size() * n * h * w);
    for (const auto& s : stacks) {
        s.validate();
        if (s.size() != n || s.height() != h || s.width() != w)
            throw std::invalid_argument(fmt::format("stack {}x{}x{} does not match {}x{}x{}", s.size(), s.height(),
                                                    s.width(), n, h, w));
        for (const auto& img : s.images)
            values.insert(values.end(), img.data().begin(), img.data().end());
    }
    return nn::Tensor(nn::Shape{stacks.size(), n, h, w}, std::move(values));
}

std::vector<ImageGray> tensor_to_images(const nn::Tensor& t, std::size_t channel)
{
    const nn::Shape s = t.shape();
    if (channel >= s.c)
        throw std::invalid_argument(fmt::format("channel {} out of range for {}", channel, s.str()));
    std::vector<ImageGray> out;
    out.reserve(s.n);
    const std::size_t hw = s.plane();
    for (std::size_t b = 0; b < s.n; ++b) {
        const double* src = t.values().data() + (b * s.c + channel) * hw;
        out.emplace_back(s.h, s.w, std::vector<double>(src, src + hw));
    }
    return out;
}

} // namespace mfuse::models
