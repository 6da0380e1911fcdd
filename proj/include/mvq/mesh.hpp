#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvq/geometry.hpp"

namespace mvq {

/// Indexed triangle surface with vertex positions in mm.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }

    void validate_indices() const {
        const int n = static_cast<int>(vertices.size());
        for (const auto& t : triangles)
            for (int i : t)
                if (i < 0 || i >= n) throw std::invalid_argument("TriangleMesh: triangle index out of range");
    }
};

/// Ordered 3D polyline; closed means the last point connects back to the first.
struct Polyline3D {
    std::vector<Vec3> points;
    bool closed = false;
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

/// Sum of triangle areas, mm².
inline double surface_area(const TriangleMesh& mesh) {
    if (mesh.empty()) throw std::invalid_argument("surface_area: empty mesh");
    double area = 0.0;
    for (const auto& t : mesh.triangles)
        area += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    return area;
}

/// Signed enclosed volume by the divergence theorem; positive for outward winding.
inline double signed_volume(const TriangleMesh& mesh) {
    if (mesh.empty()) throw std::invalid_argument("signed_volume: empty mesh");
    double vol = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        vol += dot(a, cross(b, c));
    }
    return vol / 6.0;
}

/// Polyline length in mm, including the closing segment when closed.
inline double polyline_length(const Polyline3D& polyline) {
    if (polyline.points.size() < 2) throw std::invalid_argument("polyline_length: fewer than 2 points");
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < polyline.points.size(); ++i)
        length += distance(polyline.points[i], polyline.points[i + 1]);
    if (polyline.closed) length += distance(polyline.points.back(), polyline.points.front());
    return length;
}

/// Arithmetic mean of a point set.
inline Vec3 centroid(const std::vector<Vec3>& points) {
    if (points.empty()) throw std::invalid_argument("centroid: empty point set");
    Vec3 sum{};
    for (const Vec3& p : points) sum += p;
    return sum / static_cast<double>(points.size());
}

/// Drops triangles with area below the cleanup threshold and unreferenced vertices.
inline TriangleMesh remove_degenerate_triangles(const TriangleMesh& mesh, double min_area = 1e-12) {
    TriangleMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (const auto& t : mesh.triangles) {
        if (triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) < min_area)
            continue;
        std::array<int, 3> nt{};
        for (int i = 0; i < 3; ++i) {
            if (remap[t[i]] < 0) {
                remap[t[i]] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[t[i]]);
            }
            nt[i] = remap[t[i]];
        }
        out.triangles.push_back(nt);
    }
    return out;
}

/// Splits the mesh into edge-connected components (largest first).
inline std::vector<TriangleMesh> connected_components(const TriangleMesh& mesh) {
    if (mesh.empty()) throw std::invalid_argument("connected_components: empty mesh");
    const std::size_t nv = mesh.vertices.size();
    std::vector<int> parent(nv);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<int> rank(nv, 0);
    auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank[a] < rank[b]) std::swap(a, b);
        parent[b] = a;
        if (rank[a] == rank[b]) ++rank[a];
    };
    for (const auto& t : mesh.triangles) {
        unite(t[0], t[1]);
        unite(t[1], t[2]);
    }

    std::map<int, int> root_to_component;
    std::vector<TriangleMesh> components;
    std::vector<std::vector<int>> vertex_remaps;
    for (const auto& t : mesh.triangles) {
        const int root = find(t[0]);
        auto it = root_to_component.find(root);
        if (it == root_to_component.end()) {
            it = root_to_component.emplace(root, static_cast<int>(components.size())).first;
            components.emplace_back();
            vertex_remaps.emplace_back(nv, -1);
        }
        TriangleMesh& comp = components[it->second];
        std::vector<int>& remap = vertex_remaps[it->second];
        std::array<int, 3> nt{};
        for (int i = 0; i < 3; ++i) {
            if (remap[t[i]] < 0) {
                remap[t[i]] = static_cast<int>(comp.vertices.size());
                comp.vertices.push_back(mesh.vertices[t[i]]);
            }
            nt[i] = remap[t[i]];
        }
        comp.triangles.push_back(nt);
    }
    std::sort(components.begin(), components.end(),
              [](const TriangleMesh& a, const TriangleMesh& b) { return a.triangles.size() > b.triangles.size(); });
    return components;
}

/// Euler characteristic V − E + F (counting undirected edges once).
inline long euler_characteristic(const TriangleMesh& mesh) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles)
        for (int i = 0; i < 3; ++i) {
            int a = t[i], b = t[(i + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.emplace_back(a, b);
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return static_cast<long>(mesh.vertices.size()) - static_cast<long>(edges.size()) +
           static_cast<long>(mesh.triangles.size());
}

inline TriangleMesh transformed(const TriangleMesh& mesh, const RigidTransform& transform) {
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v = transform.apply_point(v);
    return out;
}

/// Writes ASCII OBJ with 1-based face indices.
inline void save_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("OBJ: cannot open file for writing: " + path);
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!out) throw std::runtime_error("OBJ: write failed: " + path);
}

/// Writes a polyline as CSV: a "closed" flag line, an x,y,z header, then one point per row.
inline void save_polyline_csv(const Polyline3D& polyline, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("CSV: cannot open file for writing: " + path);
    out << "closed," << (polyline.closed ? 1 : 0) << "\n";
    out << "x,y,z\n";
    char buf[128];
    for (const Vec3& p : polyline.points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", p.x, p.y, p.z);
        out << buf;
    }
    if (!out) throw std::runtime_error("CSV: write failed: " + path);
}

}  // namespace mvq
