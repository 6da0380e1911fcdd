#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvq/geometry.hpp"

namespace mvq {

/// Multi-label voxel volume on an axis-aligned anisotropic grid.
/// Labels: 0 background, 1 annulus, 2 anterior leaflet, 3 posterior leaflet.
/// Voxel (i,j,k) is centred at origin + (i,j,k) ⊙ spacing; data is x-fastest.
struct LabeledVolume {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::vector<std::uint8_t> labels;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) +
                                                    static_cast<std::size_t>(dims[1]) * k);
    }

    std::uint8_t at(int i, int j, int k) const { return labels[index(i, j, k)]; }
    std::uint8_t& at(int i, int j, int k) { return labels[index(i, j, k)]; }

    Vec3 voxel_center(int i, int j, int k) const {
        return {origin[0] + i * spacing[0], origin[1] + j * spacing[1], origin[2] + k * spacing[2]};
    }

    bool same_grid(const LabeledVolume& other) const {
        return dims == other.dims && spacing == other.spacing && origin == other.origin;
    }

    /// Checks the type invariants; throws with the violated condition named.
    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (dims[a] < 2) throw std::invalid_argument("LabeledVolume: dims[" + std::to_string(a) + "] < 2");
            if (!(spacing[a] > 0.0)) throw std::invalid_argument("LabeledVolume: spacing[" + std::to_string(a) + "] <= 0");
        }
        if (labels.size() != voxel_count())
            throw std::invalid_argument("LabeledVolume: label array size does not match dims");
        for (std::uint8_t v : labels)
            if (v > 3) throw std::invalid_argument("LabeledVolume: label value > 3");
    }
};

/// Voxel count per label value present in the volume. Counts sum to the total voxel count.
inline std::map<std::uint8_t, std::size_t> label_census(const LabeledVolume& volume) {
    std::array<std::size_t, 256> counts{};
    for (std::uint8_t v : volume.labels) ++counts[v];
    std::map<std::uint8_t, std::size_t> census;
    for (int v = 0; v < 256; ++v)
        if (counts[v] > 0) census[static_cast<std::uint8_t>(v)] = counts[v];
    return census;
}

}  // namespace mvq
