#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvq/geometry.hpp"
#include "mvq/mesh.hpp"
#include "mvq/volume.hpp"

namespace mvq {

/// Static 3D kd-tree for exact nearest-neighbor distance queries.
class KdTree3 {
public:
    explicit KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("KdTree3: empty point set");
        order_.resize(points_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        build(0, order_.size(), 0);
    }

    /// Index of the closest stored point and the distance to it.
    std::pair<std::size_t, double> nearest(const Vec3& q) const {
        double best = std::numeric_limits<double>::max();
        std::size_t best_index = 0;
        search(q, 0, order_.size(), 0, best, best_index);
        return {best_index, std::sqrt(best)};
    }

    double nearest_distance(const Vec3& q) const { return nearest(q).second; }

private:
    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;

    static double coord(const Vec3& p, int axis) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; }

    void build(std::size_t lo, std::size_t hi, int axis) {
        if (hi - lo <= 1) return;
        const std::size_t mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) {
                             return coord(points_[a], axis) < coord(points_[b], axis);
                         });
        build(lo, mid, (axis + 1) % 3);
        build(mid + 1, hi, (axis + 1) % 3);
    }

    void search(const Vec3& q, std::size_t lo, std::size_t hi, int axis, double& best,
                std::size_t& best_index) const {
        if (lo >= hi) return;
        const std::size_t mid = (lo + hi) / 2;
        const Vec3& p = points_[order_[mid]];
        const Vec3 d = q - p;
        const double dd = dot(d, d);
        if (dd < best) {
            best = dd;
            best_index = order_[mid];
        }
        const double delta = coord(q, axis) - coord(p, axis);
        const int next = (axis + 1) % 3;
        if (delta < 0) {
            search(q, lo, mid, next, best, best_index);
            if (delta * delta < best) search(q, mid + 1, hi, next, best, best_index);
        } else {
            search(q, mid + 1, hi, next, best, best_index);
            if (delta * delta < best) search(q, lo, mid, next, best, best_index);
        }
    }
};

/// Symmetric mean surface distance between two point samples:
/// (sum of nearest distances A->B plus B->A) / (|A| + |B|).
inline double msd(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("msd: empty point set");
    const KdTree3 tree_a(a), tree_b(b);
    double sum = 0.0;
    for (const auto& p : a) sum += tree_b.nearest_distance(p);
    for (const auto& p : b) sum += tree_a.nearest_distance(p);
    return sum / static_cast<double>(a.size() + b.size());
}

inline double msd(const TriangleMesh& a, const TriangleMesh& b) {
    return msd(a.vertices, b.vertices);
}

/// Vertex samples plus interior triangle samples at the given spacing, for
/// mesh-aware comparison independent of tessellation density.
inline std::vector<Vec3> dense_surface_samples(const TriangleMesh& mesh, double spacing = 0.2) {
    if (!(spacing > 0)) throw std::invalid_argument("dense_surface_samples: spacing must be positive");
    std::vector<Vec3> samples = mesh.vertices;
    for (const auto& tri : mesh.triangles) {
        const Vec3& p0 = mesh.vertices[tri[0]];
        const Vec3& p1 = mesh.vertices[tri[1]];
        const Vec3& p2 = mesh.vertices[tri[2]];
        const double longest =
            std::max({distance(p0, p1), distance(p1, p2), distance(p2, p0)});
        const int n = static_cast<int>(std::ceil(longest / spacing));
        for (int i = 1; i < n; ++i)
            for (int j = 1; i + j < n; ++j)
                samples.push_back(p0 + (p1 - p0) * (static_cast<double>(i) / n) +
                                  (p2 - p0) * (static_cast<double>(j) / n));
    }
    return samples;
}

/// Dice overlap of one label (or of all foreground labels together).
inline double dice(const LabeledVolume& a, const LabeledVolume& b, int label,
                   bool complete_mask = false) {
    if (!a.same_grid(b)) throw std::invalid_argument("dice: volumes are on different grids");
    std::size_t na = 0, nb = 0, overlap = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const bool in_a = complete_mask ? a.labels[i] != 0 : a.labels[i] == label;
        const bool in_b = complete_mask ? b.labels[i] != 0 : b.labels[i] == label;
        na += in_a;
        nb += in_b;
        overlap += (in_a && in_b);
    }
    if (na + nb == 0) throw std::runtime_error("dice: both indicator sets are empty");
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(na + nb);
}

/// Bland-Altman agreement between paired measurements.
struct AgreementStats {
    double bias = 0.0;
    double loa_low = std::numeric_limits<double>::quiet_NaN();
    double loa_high = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
};

inline AgreementStats bland_altman(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("bland_altman: no pairs");
    AgreementStats stats;
    stats.n = pairs.size();
    double sum = 0.0;
    for (const auto& [a, b] : pairs) sum += b - a;
    stats.bias = sum / static_cast<double>(stats.n);
    if (stats.n >= 2) {
        double sq = 0.0;
        for (const auto& [a, b] : pairs) {
            const double d = (b - a) - stats.bias;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(stats.n - 1));
        stats.loa_low = stats.bias - 1.96 * sd;
        stats.loa_high = stats.bias + 1.96 * sd;
    }
    return stats;
}

}  // namespace mvq
