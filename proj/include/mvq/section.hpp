#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvq/mesh.hpp"

namespace mvq {

/// Cuts the mesh with a plane and assembles the intersection into ordered
/// polylines. With half_space_dir (a unit vector orthogonal to the plane
/// normal), only segments whose midpoint lies on the positive side of the
/// half-plane boundary through plane_point are kept, so a ring-like mesh
/// yields one cross-section instead of two.
inline std::vector<Polyline3D> plane_section(const TriangleMesh& mesh, const Vec3& plane_point,
                                             const Vec3& plane_normal,
                                             std::optional<Vec3> half_space_dir = std::nullopt) {
    if (std::fabs(norm(plane_normal) - 1.0) > 1e-9)
        throw std::invalid_argument("plane_section: non-unit normal");
    if (half_space_dir && std::fabs(dot(*half_space_dir, plane_normal)) > 1e-9)
        throw std::invalid_argument("plane_section: half_space_dir not orthogonal to normal");

    std::vector<double> dist(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        dist[i] = dot(mesh.vertices[i] - plane_point, plane_normal);

    using EdgeKey = std::pair<int, int>;
    std::map<EdgeKey, Vec3> edge_point;
    auto intersect_edge = [&](int a, int b) -> EdgeKey {
        EdgeKey key{std::min(a, b), std::max(a, b)};
        if (!edge_point.count(key)) {
            const double da = dist[key.first], db = dist[key.second];
            const double t = da / (da - db);
            edge_point[key] = mesh.vertices[key.first] +
                              (mesh.vertices[key.second] - mesh.vertices[key.first]) * t;
        }
        return key;
    };

    struct Segment {
        EdgeKey a, b;
    };
    std::vector<Segment> segments;
    for (const auto& tri : mesh.triangles) {
        EdgeKey crossing[3];
        int n_crossing = 0;
        for (int e = 0; e < 3; ++e) {
            const int va = tri[e], vb = tri[(e + 1) % 3];
            const bool sa = dist[va] >= 0.0, sb = dist[vb] >= 0.0;
            if (sa != sb) crossing[n_crossing++] = intersect_edge(va, vb);
        }
        if (n_crossing != 2) continue;
        const Vec3& pa = edge_point[crossing[0]];
        const Vec3& pb = edge_point[crossing[1]];
        if (squared_norm(pb - pa) < 1e-24) continue;
        if (half_space_dir) {
            const Vec3 mid = (pa + pb) * 0.5;
            if (dot(mid - plane_point, *half_space_dir) <= 0.0) continue;
        }
        segments.push_back({crossing[0], crossing[1]});
    }

    // Chain segments by their shared crossing-edge endpoints.
    std::map<EdgeKey, std::vector<int>> incident;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        incident[segments[s].a].push_back(static_cast<int>(s));
        incident[segments[s].b].push_back(static_cast<int>(s));
    }

    std::vector<bool> used(segments.size(), false);
    std::vector<Polyline3D> polylines;
    for (std::size_t seed = 0; seed < segments.size(); ++seed) {
        if (used[seed]) continue;
        std::vector<EdgeKey> chain{segments[seed].a, segments[seed].b};
        used[seed] = true;
        bool closed = false;
        for (int dir = 0; dir < 2 && !closed; ++dir) {
            while (true) {
                const EdgeKey tail = chain.back();
                int next = -1;
                for (int s : incident[tail])
                    if (!used[s]) {
                        next = s;
                        break;
                    }
                if (next < 0) break;
                used[next] = true;
                chain.push_back(segments[next].a == tail ? segments[next].b : segments[next].a);
                if (chain.back() == chain.front()) {
                    chain.pop_back();
                    closed = true;
                    break;
                }
            }
            if (!closed) std::reverse(chain.begin(), chain.end());
        }

        Polyline3D poly;
        poly.closed = closed;
        for (const EdgeKey& key : chain) {
            const Vec3& p = edge_point[key];
            if (poly.points.empty() || squared_norm(p - poly.points.back()) > 1e-24)
                poly.points.push_back(p);
        }
        if (poly.closed && poly.points.size() > 1 &&
            squared_norm(poly.points.back() - poly.points.front()) < 1e-24)
            poly.points.pop_back();
        if (poly.points.size() >= 2) polylines.push_back(std::move(poly));
    }
    return polylines;
}

}  // namespace mvq
