#include "mfuse/manip/branch.hpp"

#include "mfuse/freq/mask.hpp"
#include "mfuse/manip/dihedral.hpp"
#include "mfuse/parallel.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse {

ImageGray PointwiseDenoiser::denoise(const ImageGray& noisy) const
{
    ImageGray out(noisy.height(), noisy.width());
    std::transform(noisy.data().begin(), noisy.data().end(), out.data().begin(), fn_);
    return clip_unit(out);
}

} // namespace mfuse

namespace mfuse::manip {

void BranchStack::validate() const
{
    if (images.empty())
        throw std::invalid_argument("branch stack is empty");
    if (images.size() != modes.size())
        throw std::invalid_argument(
            fmt::format("branch stack has {} images but {} modes", images.size(), modes.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_size(images.front()))
            throw std::invalid_argument(fmt::format("branch {} is {}x{}, expected {}x{}", modes[i].id(),
                                                    images[i].height(), images[i].width(), height(), width()));
        if (i > 0 && !(modes[i - 1] < modes[i]))
            throw std::invalid_argument("branch modes must be strictly ascending");
    }
}

BranchStack BranchStack::crop(PatchOrigin origin, std::size_t h, std::size_t w) const
{
    BranchStack out;
    out.modes = modes;
    out.images.reserve(images.size());
    for (const auto& img : images)
        out.images.push_back(mfuse::crop(img, origin, h, w));
    return out;
}

ImageGray manipulate(const ImageGray& noisy, const ManipulationMode& mode)
{
    if (mode.is_dihedral())
        return apply_dihedral(clip_unit(noisy), mode);
    return freq::apply_frequency_mode(clip_unit(noisy), mode);
}

ImageGray realign(const ImageGray& denoised, const ManipulationMode& mode)
{
    if (mode.is_dihedral())
        return invert_dihedral(denoised, mode);
    return denoised;
}

BranchStack build_branch_stack(const ImageGray& noisy, const Denoiser& denoiser,
                               std::span<const ManipulationMode> modes, std::size_t jobs)
{
    if (modes.empty())
        throw std::invalid_argument("branch stack needs at least one mode");
    std::vector<ManipulationMode> sorted(modes.begin(), modes.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("duplicate manipulation modes in branch list");

    auto branch = [&](std::size_t i) {
        const ManipulationMode& mode = sorted[i];
        try {
            ImageGray out = realign(denoiser.denoise(manipulate(noisy, mode)), mode);
            if (!out.same_size(noisy))
                throw std::runtime_error(fmt::format("denoiser returned {}x{} for a {}x{} input", out.height(),
                                                     out.width(), noisy.height(), noisy.width()));
            return out;
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("branch mode {}: {}", mode.id(), e.what()));
        }
    };

    BranchStack stack;
    stack.modes = sorted;
    stack.images = parallel_map(sorted.size(), denoiser.parallel_safe() ? jobs : 1, branch);
    return stack;
}

BranchStack build_branch_stack(const ImageGray& noisy, const Denoiser& denoiser)
{
    const auto modes = all_modes();
    return build_branch_stack(noisy, denoiser, modes);
}

ImageGray simple_average(const BranchStack& stack)
{
    stack.validate();
    // Running mean: exact when all branches agree.
    ImageGray acc(stack.height(), stack.width());
    for (std::size_t k = 0; k < stack.size(); ++k) {
        auto src = stack.images[k].data();
        auto dst = acc.data();
        const double inv = 1.0 / static_cast<double>(k + 1);
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += (src[i] - dst[i]) * inv;
    }
    return clip_unit(acc);
}

} // namespace mfuse::manip
