#pragma once

#include "mfuse/freq/mask_spec.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace mfuse::manip {

enum class ModeKind { dihedral, frequency };

/// Element of D4: rotate counter-clockwise by `quarter_turns` * 90 degrees,
/// then optionally reverse the row order.
struct DihedralAction {
    int quarter_turns = 0;
    bool mirror = false;
    friend bool operator==(const DihedralAction&, const DihedralAction&) = default;
};

/// One of the 13 manipulation modes: 0-7 dihedral, 8-12 DCT masks.
class ManipulationMode {
public:
    static constexpr int count = 13;
    static constexpr int dihedral_count = 8;

    /// Throws std::invalid_argument for ids outside 0..12.
    static ManipulationMode from_id(int id);

    int id() const { return id_; }
    ModeKind kind() const { return id_ < dihedral_count ? ModeKind::dihedral : ModeKind::frequency; }
    bool is_dihedral() const { return kind() == ModeKind::dihedral; }

    /// Valid only for dihedral modes.
    DihedralAction dihedral() const;
    /// Valid only for frequency modes.
    freq::FrequencyMaskSpec mask() const;

    std::string describe() const;

    friend bool operator==(const ManipulationMode&, const ManipulationMode&) = default;
    friend auto operator<=>(const ManipulationMode& a, const ManipulationMode& b) { return a.id_ <=> b.id_; }

private:
    explicit ManipulationMode(int id) : id_(id) {}
    int id_;
};

std::vector<ManipulationMode> all_modes();
std::vector<ManipulationMode> dihedral_modes();
std::vector<ManipulationMode> modes_from_ids(std::span<const int> ids);

} // namespace mfuse::manip
