#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/mesh.hpp"
#include "mvq/periodic_spline.hpp"
#include "mvq/section.hpp"

namespace mvq {

/// Ordered section centroids of the annulus tube, with the angle each
/// surviving section was taken at and the angles that produced no section.
struct SkeletonResult {
    std::vector<Vec3> centers;
    std::vector<double> thetas;        // radians, same length as centers
    std::vector<double> empty_thetas;  // radians, skipped steps
};

/// Sections the annulus mesh with half-planes rotated about the frame axis in
/// steps of theta_offset and returns the per-section centroids in theta order.
/// Sections with no intersection are skipped, which tolerates gaps in the
/// segmentation; fewer than 4 surviving sections is an error.
inline SkeletonResult extract_skeleton(const TriangleMesh& mesh, const ValveFrame& frame,
                                       double theta_offset_deg = 15.0) {
    if (mesh.vertices.empty() || mesh.triangles.empty())
        throw std::invalid_argument("extract_skeleton: empty mesh");
    if (!(theta_offset_deg > 0.0) || theta_offset_deg > 90.0)
        throw std::invalid_argument("extract_skeleton: theta_offset must be in (0, 90] degrees");
    frame.validate();

    const double step = deg_to_rad(theta_offset_deg);
    SkeletonResult result;
    for (double theta = 0.0; theta < kTwoPi - 1e-12; theta += step) {
        const Vec3 dir = rotate_around(frame.r, frame.n, theta);
        const Vec3 plane_normal = normalized(cross(frame.n, dir));
        const auto loops = plane_section(mesh, frame.x_c, plane_normal, dir);

        Vec3 sum{0, 0, 0};
        std::size_t count = 0;
        for (const auto& loop : loops) {
            for (const auto& p : loop.points) {
                sum = sum + p;
                ++count;
            }
        }
        if (count == 0) {
            result.empty_thetas.push_back(theta);
            continue;
        }
        result.centers.push_back(sum / static_cast<double>(count));
        result.thetas.push_back(theta);
    }
    if (result.centers.size() < 4)
        throw std::runtime_error("extract_skeleton: fewer than 4 non-empty sections");
    return result;
}

/// Sweeps a circular tube of the given radius along the closed curve. Ring
/// frames are rotation-minimizing (double reflection) with the residual
/// closure twist distributed over the rings so the seam matches.
inline TriangleMesh expand_tube(const AnnulusCurve& curve, double radius, int rings = 192,
                                int sides = 16) {
    if (!(radius > 0.0)) throw std::invalid_argument("expand_tube: radius must be positive");
    if (rings < 3 || sides < 3) throw std::invalid_argument("expand_tube: rings and sides must be >= 3");

    const double total = curve.total_length();
    std::vector<Vec3> centers(rings), tangents(rings);
    for (int j = 0; j < rings; ++j) {
        const double theta = curve.theta_at_arc_length(total * j / rings);
        centers[j] = curve.sample(theta);
        tangents[j] = normalized(curve.derivative(theta));
    }

    // Rotation-minimizing frames by double reflection around the loop.
    std::vector<Vec3> u(rings);
    {
        Vec3 seed{0, 0, 1};
        if (std::fabs(dot(seed, tangents[0])) > 0.9) seed = {1, 0, 0};
        u[0] = normalized(cross(seed, tangents[0]));
    }
    for (int j = 0; j < rings; ++j) {
        const int k = (j + 1) % rings;
        const Vec3 v1 = centers[k] - centers[j];
        const double c1 = dot(v1, v1);
        const Vec3 u_l = u[j] - v1 * (2.0 / c1 * dot(v1, u[j]));
        const Vec3 t_l = tangents[j] - v1 * (2.0 / c1 * dot(v1, tangents[j]));
        const Vec3 v2 = tangents[k] - t_l;
        const double c2 = dot(v2, v2);
        Vec3 u_next = (c2 > 1e-300) ? u_l - v2 * (2.0 / c2 * dot(v2, u_l)) : u_l;
        u_next = normalized(u_next - tangents[k] * dot(u_next, tangents[k]));
        if (k == 0) {
            // Closure mismatch between the transported frame and the seed.
            const Vec3 v0 = cross(tangents[0], u[0]);
            const double twist = std::atan2(dot(u_next, v0), dot(u_next, u[0]));
            for (int i = 1; i < rings; ++i)
                u[i] = rotate_around(u[i], tangents[i], -twist * i / rings);
        } else {
            u[k] = u_next;
        }
    }

    TriangleMesh tube;
    tube.vertices.reserve(static_cast<std::size_t>(rings) * sides);
    for (int j = 0; j < rings; ++j) {
        const Vec3 v = cross(tangents[j], u[j]);
        for (int k = 0; k < sides; ++k) {
            const double alpha = kTwoPi * k / sides;
            tube.vertices.push_back(centers[j] + (u[j] * std::cos(alpha) + v * std::sin(alpha)) * radius);
        }
    }
    auto vid = [sides](int j, int k) { return j * sides + (k % sides); };
    for (int j = 0; j < rings; ++j) {
        const int jn = (j + 1) % rings;
        for (int k = 0; k < sides; ++k) {
            tube.triangles.push_back({vid(j, k), vid(j, k + 1), vid(jn, k + 1)});
            tube.triangles.push_back({vid(j, k), vid(jn, k + 1), vid(jn, k)});
        }
    }
    return tube;
}

/// Full annulus correction: skeletonize the raw tube surface, interpolate the
/// surviving centers with a periodic spline, and re-expand a clean tube.
struct AnnulusRefinement {
    SkeletonResult skeleton;
    AnnulusCurve curve;
    TriangleMesh tube;
};

inline AnnulusRefinement refine_annulus(const TriangleMesh& raw_annulus, const ValveFrame& frame,
                                        double theta_offset_deg = 15.0, double tube_radius = 1.0) {
    AnnulusRefinement out;
    out.skeleton = extract_skeleton(raw_annulus, frame, theta_offset_deg);
    out.curve = AnnulusCurve(out.skeleton.centers, out.skeleton.thetas);
    out.tube = expand_tube(out.curve, tube_radius);
    return out;
}

}  // namespace mvq
