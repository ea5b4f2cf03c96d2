#pragma once

#include "mfuse/nn/layers.hpp"

#include <functional>
#include <string>

namespace mfuse::nn {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst; ///< "name[index]" of the worst element
    std::size_t checked = 0;
    std::size_t skipped = 0; ///< elements excluded as kink crossings
};

/// Compares analytic gradients of a scalar-valued `forward` against central
/// differences with the given step, over every element of `inputs` (which
/// must be trainable leaves). Relative error is
/// |a - n| / max(|a| + |n|, floor); the floor keeps gradients that are zero
/// up to rounding (e.g. a conv bias feeding batch norm) from reading as
/// 100% error. Gradients of `inputs` are left zeroed.
///
/// With `skip_kinks`, the central difference is repeated at half the step;
/// an element whose two estimates disagree by more than 0.1% (and by more
/// than `floor`) is taken to straddle a relu/abs kink and excluded from the
/// maximum. Only the numeric side is consulted, so a wrong analytic gradient
/// cannot be hidden this way; callers should bound `skipped`.
GradCheckReport gradient_check(const std::function<Tensor()>& forward, const ParamList& inputs, double step,
                               double floor = 1e-6, bool skip_kinks = false);

} // namespace mfuse::nn
