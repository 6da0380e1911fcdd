#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/mesh.hpp"

namespace mvq {

/// Valve orifice frame: centre x_c, plane normal n (lowest-variance direction),
/// radial direction r (highest-variance direction). The orifice plane Π passes
/// through x_c with normal n.
struct ValveFrame {
    Vec3 x_c{};
    Vec3 n{0, 0, 1};
    Vec3 r{1, 0, 0};

    /// Second in-plane axis completing the right-handed basis (r, t, n).
    Vec3 t() const { return cross(n, r); }

    /// Signed height of a point above the orifice plane.
    double height(const Vec3& p) const { return dot(p - x_c, n); }

    void validate() const {
        if (std::fabs(norm(n) - 1.0) > 1e-12 || std::fabs(norm(r) - 1.0) > 1e-12)
            throw std::invalid_argument("ValveFrame: axes must be unit length");
        if (std::fabs(dot(n, r)) > 1e-9)
            throw std::invalid_argument("ValveFrame: n and r must be orthogonal");
    }
};

/// Fits the valve frame to a point cloud: x_c is the centroid, r and n the
/// highest- and lowest-variance directions of the centred points.
inline ValveFrame fit_valve_frame(const std::vector<Vec3>& points) {
    if (points.size() < 3) throw std::invalid_argument("fit_valve_frame: fewer than 3 points");
    Vec3 c = centroid(points);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : points) {
        const Eigen::Vector3d d(p.x - c.x, p.y - c.y, p.z - c.z);
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("fit_valve_frame: eigen decomposition failed");
    const Eigen::Vector3d eigenvalues = solver.eigenvalues();  // ascending
    if (eigenvalues(1) <= 1e-12 * std::max(eigenvalues(2), 1e-300))
        throw std::invalid_argument("fit_valve_frame: points are collinear or coincident (rank < 2)");

    const Eigen::Vector3d vn = solver.eigenvectors().col(0);
    const Eigen::Vector3d vr = solver.eigenvectors().col(2);
    ValveFrame frame;
    frame.x_c = c;
    frame.n = normalized({vn(0), vn(1), vn(2)});
    frame.r = normalized({vr(0), vr(1), vr(2)});
    // Remove the tiny non-orthogonality left by the solver.
    frame.r = normalized(frame.r - frame.n * dot(frame.n, frame.r));
    frame.validate();
    return frame;
}

/// Orients the frame so the leaflets lie on the negative ("ventricular") side
/// of the orifice plane; "highest" thereafter means maximal +n coordinate.
/// Flips n and r together, preserving handedness.
inline ValveFrame orient_normal(const ValveFrame& frame, const std::vector<TriangleMesh>& leaflet_meshes) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const TriangleMesh& mesh : leaflet_meshes) {
        for (const Vec3& v : mesh.vertices) {
            sum += frame.height(v);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("orient_normal: no leaflet vertices");
    const double mean = sum / static_cast<double>(count);
    if (std::fabs(mean) < 1e-9)
        throw std::runtime_error(
            "orient_normal: leaflet vertices balanced across the plane; pass the valve axis manually");
    ValveFrame out = frame;
    if (mean > 0.0) {
        out.n = -out.n;
        out.r = -out.r;
    }
    return out;
}

}  // namespace mvq
