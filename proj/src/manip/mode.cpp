#include "mfuse/manip/mode.hpp"

#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::manip {
namespace {

constexpr std::array<DihedralAction, 8> dihedral_table{{
    {0, false}, // 0 identity
    {1, true},  // 1 rotate 90 + vertical mirror
    {0, true},  // 2 vertical mirror
    {3, false}, // 3 rotate 270
    {2, true},  // 4 rotate 180 + vertical mirror
    {1, false}, // 5 rotate 90
    {2, false}, // 6 rotate 180
    {3, true},  // 7 rotate 270 + vertical mirror
}};

const std::array<freq::FrequencyMaskSpec, 5> frequency_table{{
    freq::FrequencyMaskSpec::after(0.1),
    freq::FrequencyMaskSpec::after(0.3),
    freq::FrequencyMaskSpec::after(0.5),
    freq::FrequencyMaskSpec::between(0.4, 0.5),
    freq::FrequencyMaskSpec::between(0.5, 0.9),
}};

} // namespace

ManipulationMode ManipulationMode::from_id(int id)
{
    if (id < 0 || id >= count)
        throw std::invalid_argument(fmt::format("unknown manipulation mode {} (expected 0..12)", id));
    return ManipulationMode(id);
}

DihedralAction ManipulationMode::dihedral() const
{
    if (!is_dihedral())
        throw std::invalid_argument(fmt::format("mode {} is a frequency mode, not dihedral", id_));
    return dihedral_table[static_cast<std::size_t>(id_)];
}

freq::FrequencyMaskSpec ManipulationMode::mask() const
{
    if (is_dihedral())
        throw std::invalid_argument(fmt::format("mode {} is a dihedral mode, not frequency", id_));
    return frequency_table[static_cast<std::size_t>(id_ - dihedral_count)];
}

std::string ManipulationMode::describe() const
{
    if (is_dihedral()) {
        const auto a = dihedral();
        std::string s = a.quarter_turns == 0 ? std::string("identity") : fmt::format("rot{}", 90 * a.quarter_turns);
        if (a.mirror)
            s = a.quarter_turns == 0 ? "mirror" : s + "+mirror";
        return s;
    }
    const auto m = mask();
    if (m.outer_frac == freq::FrequencyMaskSpec::unbounded)
        return fmt::format("dct_after_{:.1f}", m.inner_frac);
    return fmt::format("dct_between_{:.1f}_{:.1f}", m.inner_frac, m.outer_frac);
}

std::vector<ManipulationMode> all_modes()
{
    std::vector<ManipulationMode> modes;
    for (int id = 0; id < ManipulationMode::count; ++id)
        modes.push_back(ManipulationMode::from_id(id));
    return modes;
}

std::vector<ManipulationMode> dihedral_modes()
{
    std::vector<ManipulationMode> modes;
    for (int id = 0; id < ManipulationMode::dihedral_count; ++id)
        modes.push_back(ManipulationMode::from_id(id));
    return modes;
}

std::vector<ManipulationMode> modes_from_ids(std::span<const int> ids)
{
    std::vector<ManipulationMode> modes;
    modes.reserve(ids.size());
    for (int id : ids)
        modes.push_back(ManipulationMode::from_id(id));
    return modes;
}

} // namespace mfuse::manip
