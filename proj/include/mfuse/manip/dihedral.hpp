#pragma once

#include "mfuse/image.hpp"
#include "mfuse/manip/mode.hpp"

namespace mfuse::manip {

/// Counter-clockwise rotation by quarter_turns * 90 degrees.
ImageGray rotate_ccw(const ImageGray& image, int quarter_turns);

/// Vertical mirroring: reverses the row order.
ImageGray mirror_rows(const ImageGray& image);

ImageGray apply_action(const ImageGray& image, DihedralAction action);
ImageGray invert_action(const ImageGray& image, DihedralAction action);

/// Rotation first, then mirror. Rejects frequency modes.
ImageGray apply_dihedral(const ImageGray& image, const ManipulationMode& mode);
ImageGray invert_dihedral(const ImageGray& image, const ManipulationMode& mode);

} // namespace mfuse::manip
