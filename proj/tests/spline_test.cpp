#include "mvq/periodic_spline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/geometry.hpp"

namespace mvq {
namespace {

std::vector<Vec3> circle_points(double radius, int n, double phase = 0.0) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = kTwoPi * i / n + phase;
        pts.push_back({radius * std::cos(t), radius * std::sin(t), 0.0});
    }
    return pts;
}

TEST(AnnulusCurve, InterpolatesControlPointsExactly) {
    const auto pts = circle_points(10.0, 16);
    const AnnulusCurve curve(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double theta = kTwoPi * static_cast<double>(i) / pts.size();
        EXPECT_NEAR(norm(curve.sample(theta) - pts[i]), 0.0, 1e-10);
    }
}

TEST(AnnulusCurve, TracksACircleBetweenKnots) {
    const double radius = 10.0;
    const AnnulusCurve curve(circle_points(radius, 24));
    for (int i = 0; i < 500; ++i) {
        const double theta = kTwoPi * i / 500.0;
        const Vec3 p = curve.sample(theta);
        EXPECT_NEAR(norm(p), radius, 5e-3);
        EXPECT_NEAR(p.z, 0.0, 1e-12);
    }
}

TEST(AnnulusCurve, CircleLengthAndDerivatives) {
    const double radius = 12.0;
    const AnnulusCurve curve(circle_points(radius, 24));
    EXPECT_NEAR(curve.total_length(), kTwoPi * radius, 1e-3 * kTwoPi * radius);

    for (int i = 0; i < 50; ++i) {
        const double theta = kTwoPi * i / 50.0;
        const Vec3 p = curve.sample(theta);
        const Vec3 d = curve.derivative(theta);
        EXPECT_NEAR(dot(p, d) / (norm(p) * norm(d)), 0.0, 1e-3);
        const Vec3 dd = curve.second_derivative(theta);
        EXPECT_NEAR(dot(normalized(dd), normalized(p)), -1.0, 5e-3);
    }
}

TEST(AnnulusCurve, PeriodicAndSmoothAcrossTheSeam) {
    const AnnulusCurve curve(circle_points(8.0, 12, 0.3));
    for (double theta : {0.0, 1.0, 4.5}) {
        EXPECT_NEAR(norm(curve.sample(theta + kTwoPi) - curve.sample(theta)), 0.0, 1e-12);
        EXPECT_NEAR(norm(curve.sample(theta - kTwoPi) - curve.sample(theta)), 0.0, 1e-12);
    }
    const double eps = 1e-7;
    const Vec3 before = curve.derivative(kTwoPi - eps);
    const Vec3 after = curve.derivative(kTwoPi + eps);
    EXPECT_NEAR(norm(before - after), 0.0, 1e-4);
}

TEST(AnnulusCurve, ArcLengthIsMonotoneAndInvertible) {
    const AnnulusCurve curve(circle_points(9.0, 20));
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
        const double theta = kTwoPi * i / 40.0 * 0.999;
        const double s = curve.arc_length(theta);
        EXPECT_GT(s, prev);
        prev = s;
        EXPECT_NEAR(curve.theta_at_arc_length(s), theta, 1e-6);
    }
}

TEST(AnnulusCurve, SampleAtArcLengthHitsQuarterPoints) {
    const double radius = 10.0;
    const AnnulusCurve curve(circle_points(radius, 32));
    const double quarter = curve.total_length() / 4.0;
    const Vec3 q = curve.sample_at_arc_length(quarter);
    EXPECT_NEAR(norm(q - Vec3{0, radius, 0}), 0.0, 2e-3);
    const Vec3 half = curve.sample_at_arc_length(2 * quarter);
    EXPECT_NEAR(norm(half - Vec3{-radius, 0, 0}), 0.0, 2e-3);
}

TEST(AnnulusCurve, NonUniformKnotsKeepInterpolation) {
    // Cluster knots on one side, as a skeleton with a gap would produce.
    std::vector<double> knots = {0.0, 0.2, 0.5, 0.9, 1.4, 2.0, 2.7, 3.5, 4.4, 5.4};
    std::vector<Vec3> pts;
    for (double k : knots) pts.push_back({7 * std::cos(k), 7 * std::sin(k), std::sin(2 * k)});
    const AnnulusCurve curve(pts, knots);
    for (std::size_t i = 0; i < knots.size(); ++i)
        EXPECT_NEAR(norm(curve.sample(knots[i]) - pts[i]), 0.0, 1e-10);
    EXPECT_GT(curve.total_length(), kTwoPi * 7);
}

TEST(AnnulusCurve, DeduplicatesAndValidates) {
    auto pts = circle_points(5.0, 8);
    pts.push_back(pts.back());
    EXPECT_NO_THROW(AnnulusCurve{pts});

    EXPECT_THROW(AnnulusCurve(circle_points(5.0, 3)), std::invalid_argument);
    EXPECT_THROW(AnnulusCurve(std::vector<Vec3>(8, Vec3{1, 2, 3})), std::invalid_argument);

    const auto good = circle_points(5.0, 8);
    EXPECT_THROW(AnnulusCurve(good, {0.0, 0.1}), std::invalid_argument);
    std::vector<double> unsorted = {0.0, 0.2, 0.1, 0.5, 1.0, 2.0, 3.0, 4.0};
    EXPECT_THROW(AnnulusCurve(good, unsorted), std::invalid_argument);
    std::vector<double> wide = {0.0, 1, 2, 3, 4, 5, 6, 6.5};
    EXPECT_THROW(AnnulusCurve(good, wide), std::invalid_argument);
}

}  // namespace
}  // namespace mvq
