#include "mvq/frame.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/geometry.hpp"
#include "mvq/mesh.hpp"

namespace mvq {
namespace {

/// Ellipse sample points in the plane spanned by (e1, e2) through `center`.
std::vector<Vec3> ellipse(const Vec3& center, const Vec3& e1, const Vec3& e2, double a, double b,
                          int n = 128) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = kTwoPi * i / n;
        pts.push_back(center + e1 * (a * std::cos(t)) + e2 * (b * std::sin(t)));
    }
    return pts;
}

TEST(FitValveFrame, RecoversTiltedPlane) {
    const Vec3 center{4, -2, 7};
    const Vec3 e1 = normalized({1, 2, 0});
    const Vec3 e2 = normalized(cross(Vec3{0.3, -0.1, 1}, e1));
    const Vec3 plane_normal = normalized(cross(e1, e2));

    const ValveFrame frame = fit_valve_frame(ellipse(center, e1, e2, 18, 14));
    frame.validate();
    EXPECT_NEAR(norm(frame.x_c - center), 0.0, 1e-9);
    EXPECT_NEAR(std::fabs(dot(frame.n, plane_normal)), 1.0, 1e-9);
    EXPECT_NEAR(std::fabs(dot(frame.r, e1)), 1.0, 1e-9);
    EXPECT_NEAR(dot(frame.n, frame.r), 0.0, 1e-12);
}

TEST(FitValveFrame, MajorAxisWinsTheRadialDirection) {
    const auto pts = ellipse({0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, 5, 20);
    const ValveFrame frame = fit_valve_frame(pts);
    EXPECT_NEAR(std::fabs(frame.r.y), 1.0, 1e-9);
    EXPECT_NEAR(std::fabs(frame.n.z), 1.0, 1e-9);
}

TEST(FitValveFrame, HeightIsSignedPlaneDistance) {
    const auto pts = ellipse({0, 0, 3}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, 10, 8);
    const ValveFrame frame = fit_valve_frame(pts);
    const double sign = frame.n.z > 0 ? 1.0 : -1.0;
    EXPECT_NEAR(frame.height({2, 5, 7}), sign * 4.0, 1e-9);
    EXPECT_NEAR(frame.height({-1, 0, 3}), 0.0, 1e-9);
}

TEST(FitValveFrame, TangentCompletesRightHandedTriad) {
    const auto pts = ellipse({1, 1, 1}, normalized({1, 1, 0}), normalized({-1, 1, 3}), 12, 9);
    const ValveFrame frame = fit_valve_frame(pts);
    const Vec3 t = frame.t();
    EXPECT_NEAR(norm(t), 1.0, 1e-12);
    EXPECT_NEAR(dot(t, frame.n), 0.0, 1e-12);
    EXPECT_NEAR(dot(t, frame.r), 0.0, 1e-12);
    EXPECT_NEAR(dot(cross(frame.n, frame.r), t), 1.0, 1e-12);
}

TEST(FitValveFrame, RejectsDegenerateInput) {
    EXPECT_THROW(fit_valve_frame({{0, 0, 0}, {1, 0, 0}}), std::invalid_argument);
    std::vector<Vec3> line;
    for (int i = 0; i < 10; ++i) line.push_back({static_cast<double>(i), 0, 0});
    EXPECT_THROW(fit_valve_frame(line), std::invalid_argument);
    std::vector<Vec3> same(10, Vec3{1, 2, 3});
    EXPECT_THROW(fit_valve_frame(same), std::invalid_argument);
}

TEST(OrientNormal, PutsLeafletsBelowThePlane) {
    const auto pts = ellipse({0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, 15, 12);
    const ValveFrame frame = fit_valve_frame(pts);

    TriangleMesh low;
    low.vertices = {{0, 0, -3}, {1, 0, -4}, {0, 1, -5}};
    low.triangles = {{0, 1, 2}};
    const ValveFrame oriented = orient_normal(frame, {low});
    for (const auto& v : low.vertices) EXPECT_LT(oriented.height(v), 0.0);
    EXPECT_GT(oriented.n.z, 0.0);

    // Flipping preserves handedness, so t flips together with n and r.
    EXPECT_NEAR(dot(cross(oriented.n, oriented.r), oriented.t()), 1.0, 1e-12);

    TriangleMesh high = low;
    for (auto& v : high.vertices) v.z = -v.z;
    const ValveFrame flipped = orient_normal(frame, {high});
    EXPECT_LT(flipped.n.z, 0.0);
}

TEST(OrientNormal, RejectsEmptyOrBalancedLeaflets) {
    const auto pts = ellipse({0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, 15, 12);
    const ValveFrame frame = fit_valve_frame(pts);
    EXPECT_THROW(orient_normal(frame, {}), std::invalid_argument);

    TriangleMesh balanced;
    balanced.vertices = {{0, 0, -1}, {1, 0, -1}, {0, 1, 2}};
    balanced.triangles = {{0, 1, 2}};
    EXPECT_THROW(orient_normal(frame, {balanced}), std::runtime_error);
}

}  // namespace
}  // namespace mvq
