#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/mesh.hpp"

namespace mvq {

/// Regular lattice in the annular-plane coordinates: u along r, v along
/// t = n x r, node (i, j) at (u0 + i*res, v0 + j*res).
struct GridSpec {
    double u0 = 0, v0 = 0;
    double resolution = 0.5;
    int nu = 0, nv = 0;

    bool matches(const GridSpec& other) const {
        return nu == other.nu && nv == other.nv &&
               std::fabs(u0 - other.u0) < 1e-9 && std::fabs(v0 - other.v0) < 1e-9 &&
               std::fabs(resolution - other.resolution) < 1e-9;
    }
};

/// Height function sampled on a GridSpec, with a footprint mask marking the
/// nodes where the surface is defined.
struct HeightField {
    ValveFrame frame;
    GridSpec grid;
    std::vector<double> values;       // grid.nu * grid.nv, i fastest
    std::vector<std::uint8_t> mask;   // same layout, 1 = inside footprint

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * grid.nu + i;
    }
    double node_u(int i) const { return grid.u0 + i * grid.resolution; }
    double node_v(int j) const { return grid.v0 + j * grid.resolution; }

    /// World position of a masked node lifted by its height value.
    Vec3 node_point(int i, int j) const {
        return point_at(node_u(i), node_v(j), values[index(i, j)]);
    }
    Vec3 point_at(double u, double v, double h) const {
        return frame.x_c + frame.r * u + frame.t() * v + frame.n * h;
    }

    bool masked(int i, int j) const {
        return i >= 0 && j >= 0 && i < grid.nu && j < grid.nv && mask[index(i, j)] != 0;
    }

    std::size_t masked_count() const {
        std::size_t n = 0;
        for (auto m : mask) n += (m != 0);
        return n;
    }

    bool same_grid(const HeightField& other) const {
        return grid.matches(other.grid) &&
               distance(frame.x_c, other.frame.x_c) < 1e-9 &&
               distance(frame.n, other.frame.n) < 1e-9 &&
               distance(frame.r, other.frame.r) < 1e-9;
    }

    /// Bilinear height at (u, v); requires the four surrounding nodes masked.
    bool interpolate(double u, double v, double& h_out) const {
        const double fi = (u - grid.u0) / grid.resolution;
        const double fj = (v - grid.v0) / grid.resolution;
        const int i = static_cast<int>(std::floor(fi));
        const int j = static_cast<int>(std::floor(fj));
        if (!masked(i, j) || !masked(i + 1, j) || !masked(i, j + 1) || !masked(i + 1, j + 1))
            return false;
        const double a = fi - i, b = fj - j;
        h_out = values[index(i, j)] * (1 - a) * (1 - b) + values[index(i + 1, j)] * a * (1 - b) +
                values[index(i, j + 1)] * (1 - a) * b + values[index(i + 1, j + 1)] * a * b;
        return true;
    }
};

/// In-plane coordinates of a world point: (u, v) across the plane, h along n.
inline void plane_coordinates(const ValveFrame& frame, const Vec3& p, double& u, double& v,
                              double& h) {
    const Vec3 d = p - frame.x_c;
    u = dot(d, frame.r);
    v = dot(d, frame.t());
    h = dot(d, frame.n);
}

/// Grid covering the projected points with the given margin, node-aligned to
/// multiples of the resolution so independently fitted fields can share it.
inline GridSpec make_grid(const ValveFrame& frame, const std::vector<Vec3>& points,
                          double resolution, double margin) {
    if (!(resolution > 0)) throw std::invalid_argument("make_grid: resolution must be positive");
    if (points.empty()) throw std::invalid_argument("make_grid: no points");
    double u_min = std::numeric_limits<double>::max(), u_max = -u_min;
    double v_min = u_min, v_max = -u_min;
    for (const auto& p : points) {
        double u, v, h;
        plane_coordinates(frame, p, u, v, h);
        u_min = std::min(u_min, u);
        u_max = std::max(u_max, u);
        v_min = std::min(v_min, v);
        v_max = std::max(v_max, v);
    }
    GridSpec g;
    g.resolution = resolution;
    g.u0 = std::floor((u_min - margin) / resolution) * resolution;
    g.v0 = std::floor((v_min - margin) / resolution) * resolution;
    g.nu = static_cast<int>(std::ceil((u_max + margin - g.u0) / resolution)) + 1;
    g.nv = static_cast<int>(std::ceil((v_max + margin - g.v0) / resolution)) + 1;
    return g;
}

/// 3D area of the masked height field: full quads contribute two lifted
/// triangles, quads with exactly three masked corners contribute one.
inline double height_field_area(const HeightField& field) {
    if (field.masked_count() == 0) throw std::invalid_argument("height_field_area: empty mask");
    double area = 0.0;
    for (int j = 0; j + 1 < field.grid.nv; ++j) {
        for (int i = 0; i + 1 < field.grid.nu; ++i) {
            const bool m00 = field.masked(i, j), m10 = field.masked(i + 1, j);
            const bool m01 = field.masked(i, j + 1), m11 = field.masked(i + 1, j + 1);
            const int count = m00 + m10 + m01 + m11;
            if (count < 3) continue;
            const Vec3 p00 = m00 ? field.node_point(i, j) : Vec3{};
            const Vec3 p10 = m10 ? field.node_point(i + 1, j) : Vec3{};
            const Vec3 p01 = m01 ? field.node_point(i, j + 1) : Vec3{};
            const Vec3 p11 = m11 ? field.node_point(i + 1, j + 1) : Vec3{};
            if (count == 4) {
                area += triangle_area(p00, p10, p11) + triangle_area(p00, p11, p01);
            } else if (!m00) {
                area += triangle_area(p10, p11, p01);
            } else if (!m10) {
                area += triangle_area(p00, p11, p01);
            } else if (!m01) {
                area += triangle_area(p00, p10, p11);
            } else {
                area += triangle_area(p00, p10, p01);
            }
        }
    }
    return area;
}

/// Triangulated masked surface for export.
inline TriangleMesh height_field_mesh(const HeightField& field) {
    TriangleMesh mesh;
    std::vector<std::int64_t> node_id(field.values.size(), -1);
    auto vertex = [&](int i, int j) {
        auto& id = node_id[field.index(i, j)];
        if (id < 0) {
            id = static_cast<std::int64_t>(mesh.vertices.size());
            mesh.vertices.push_back(field.node_point(i, j));
        }
        return static_cast<int>(id);
    };
    for (int j = 0; j + 1 < field.grid.nv; ++j) {
        for (int i = 0; i + 1 < field.grid.nu; ++i) {
            if (!field.masked(i, j) || !field.masked(i + 1, j) || !field.masked(i, j + 1) ||
                !field.masked(i + 1, j + 1))
                continue;
            const auto a = vertex(i, j), b = vertex(i + 1, j);
            const auto c = vertex(i + 1, j + 1), d = vertex(i, j + 1);
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }
    }
    return mesh;
}

struct SignedFieldSummary {
    double min = 0, max = 0, mean = 0;
    std::size_t n = 0;
};

/// Signed height of a leaflet middle surface above the orifice surface,
/// positive toward the atrial (+n) side, on the masks' intersection.
inline HeightField leaflet_height_field(const HeightField& leaflet, const HeightField& orifice,
                                        SignedFieldSummary* summary = nullptr) {
    if (!leaflet.same_grid(orifice))
        throw std::invalid_argument("leaflet_height_field: height fields on different grids");
    HeightField out = leaflet;
    SignedFieldSummary stats;
    stats.min = std::numeric_limits<double>::max();
    stats.max = -stats.min;
    double sum = 0.0;
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        if (leaflet.mask[k] && orifice.mask[k]) {
            out.mask[k] = 1;
            out.values[k] = leaflet.values[k] - orifice.values[k];
            stats.min = std::min(stats.min, out.values[k]);
            stats.max = std::max(stats.max, out.values[k]);
            sum += out.values[k];
            ++stats.n;
        } else {
            out.mask[k] = 0;
            out.values[k] = 0.0;
        }
    }
    if (stats.n == 0)
        throw std::runtime_error("leaflet_height_field: leaflet and orifice footprints are disjoint");
    stats.mean = sum / static_cast<double>(stats.n);
    if (summary) *summary = stats;
    return out;
}

/// CSV export of a height field: header, then one "i,j,u,v,h" row per masked node.
inline void save_height_field_csv(const HeightField& field, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "i,j,u,v,h\n");
    for (int j = 0; j < field.grid.nv; ++j)
        for (int i = 0; i < field.grid.nu; ++i)
            if (field.masked(i, j))
                std::fprintf(f, "%d,%d,%.9g,%.9g,%.9g\n", i, j, field.node_u(i), field.node_v(j),
                             field.values[field.index(i, j)]);
    std::fclose(f);
}

}  // namespace mvq
