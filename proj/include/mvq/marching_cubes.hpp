#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mvq/mc_tables.hpp"
#include "mvq/mesh.hpp"
#include "mvq/volume.hpp"

namespace mvq {

/// Extracts the 0.5-isosurface of the binary indicator of one label with the
/// standard 256-case marching cubes table and linear edge interpolation.
/// Vertices are in world mm. Triangles wind outward (positive enclosed volume
/// around interior regions). Degenerate triangles are dropped.
inline TriangleMesh extract_surface(const LabeledVolume& volume, std::uint8_t label) {
    const int nx = volume.dims[0], ny = volume.dims[1], nz = volume.dims[2];
    const double iso = 0.5;

    bool label_present = false;
    for (std::uint8_t v : volume.labels)
        if (v == label) {
            label_present = true;
            break;
        }
    if (!label_present)
        throw std::runtime_error("extract_surface: label " + std::to_string(int(label)) +
                                 " absent from volume");

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, int> edge_vertex;
    edge_vertex.reserve(1 << 16);

    auto value_at = [&](int i, int j, int k) -> double {
        return volume.at(i, j, k) == label ? 1.0 : 0.0;
    };
    auto voxel_id = [&](int i, int j, int k) -> std::uint64_t {
        return static_cast<std::uint64_t>(volume.index(i, j, k));
    };

    for (int k = 0; k + 1 < nz; ++k) {
        for (int j = 0; j + 1 < ny; ++j) {
            for (int i = 0; i + 1 < nx; ++i) {
                double corner_value[8];
                std::uint64_t corner_id[8];
                int case_index = 0;
                for (int c = 0; c < 8; ++c) {
                    const auto& off = mc_tables::kCornerOffsets[c];
                    corner_value[c] = value_at(i + off[0], j + off[1], k + off[2]);
                    corner_id[c] = voxel_id(i + off[0], j + off[1], k + off[2]);
                    if (corner_value[c] >= iso) case_index |= 1 << c;
                }
                const std::uint16_t edge_flags = mc_tables::kEdgeFlags[case_index];
                if (edge_flags == 0) continue;

                int edge_vertex_index[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(edge_flags & (1 << e))) continue;
                    const int ca = mc_tables::kEdgeCorners[e][0];
                    const int cb = mc_tables::kEdgeCorners[e][1];
                    std::uint64_t ida = corner_id[ca], idb = corner_id[cb];
                    if (ida > idb) std::swap(ida, idb);
                    const std::uint64_t key = (ida << 32) | idb;
                    auto it = edge_vertex.find(key);
                    if (it == edge_vertex.end()) {
                        const auto& oa = mc_tables::kCornerOffsets[ca];
                        const auto& ob = mc_tables::kCornerOffsets[cb];
                        const double va = corner_value[ca], vb = corner_value[cb];
                        const double t = (iso - va) / (vb - va);
                        const Vec3 pa = volume.voxel_center(i + oa[0], j + oa[1], k + oa[2]);
                        const Vec3 pb = volume.voxel_center(i + ob[0], j + ob[1], k + ob[2]);
                        it = edge_vertex.emplace(key, static_cast<int>(mesh.vertices.size())).first;
                        mesh.vertices.push_back(pa + (pb - pa) * t);
                    }
                    edge_vertex_index[e] = it->second;
                }

                const auto& row = mc_tables::kTriangleTable[case_index];
                for (int t = 0; row[3 * t] >= 0; ++t) {
                    mesh.triangles.push_back({edge_vertex_index[row[3 * t]],
                                              edge_vertex_index[row[3 * t + 2]],
                                              edge_vertex_index[row[3 * t + 1]]});
                }
            }
        }
    }

    return remove_degenerate_triangles(mesh);
}

}  // namespace mvq
