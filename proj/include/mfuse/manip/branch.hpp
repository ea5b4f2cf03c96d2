#pragma once

#include "mfuse/denoiser.hpp"
#include "mfuse/image.hpp"
#include "mfuse/manip/mode.hpp"

#include <span>
#include <vector>

namespace mfuse::manip {

/// Realigned denoised branches, one per mode, in ascending mode order.
struct BranchStack {
    std::vector<ManipulationMode> modes;
    std::vector<ImageGray> images;

    std::size_t size() const { return images.size(); }
    std::size_t height() const { return images.empty() ? 0 : images.front().height(); }
    std::size_t width() const { return images.empty() ? 0 : images.front().width(); }

    /// Throws std::invalid_argument if the invariants do not hold.
    void validate() const;
    /// Same crop of every branch.
    BranchStack crop(PatchOrigin origin, std::size_t height, std::size_t width) const;
};

/// Denoiser input for a mode: dihedral permutation or DCT mask, clipped to [0, 1].
ImageGray manipulate(const ImageGray& noisy, const ManipulationMode& mode);

/// Undo the dihedral permutation; frequency branches are already aligned.
ImageGray realign(const ImageGray& denoised, const ManipulationMode& mode);

/// manipulate -> denoise -> realign for each mode. Modes are sorted
/// ascending; duplicates are rejected. Branches are computed on up to `jobs`
/// threads when the denoiser is parallel-safe.
BranchStack build_branch_stack(const ImageGray& noisy, const Denoiser& denoiser,
                               std::span<const ManipulationMode> modes, std::size_t jobs = 1);
BranchStack build_branch_stack(const ImageGray& noisy, const Denoiser& denoiser);

/// Per-pixel mean over branches, clipped.
ImageGray simple_average(const BranchStack& stack);

} // namespace mfuse::manip
