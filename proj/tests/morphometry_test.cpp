#include "mvq/morphometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/height_field.hpp"
#include "mvq/landmarks.hpp"
#include "mvq/periodic_spline.hpp"

namespace {

using mvq::Vec3;

mvq::ValveFrame z_frame(Vec3 center = {0, 0, 0}) {
    mvq::ValveFrame frame;
    frame.x_c = center;
    frame.n = {0, 0, 1};
    frame.r = {1, 0, 0};
    return frame;
}

std::vector<Vec3> ring(int n, double radius, double h1 = 0.0) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = mvq::kTwoPi * i / n;
        pts.push_back({radius * std::cos(t), radius * std::sin(t), h1 * std::cos(2.0 * t)});
    }
    return pts;
}

mvq::HeightField ramp_field(double slope) {
    mvq::HeightField field;
    field.frame = z_frame();
    field.grid.u0 = 0.0;
    field.grid.v0 = -2.0;
    field.grid.nu = 21;
    field.grid.nv = 9;
    field.grid.resolution = 0.5;
    const std::size_t n = static_cast<std::size_t>(field.grid.nu) * field.grid.nv;
    field.values.resize(n);
    field.mask.assign(n, 1);
    for (int j = 0; j < field.grid.nv; ++j)
        for (int i = 0; i < field.grid.nu; ++i)
            field.values[field.index(i, j)] = slope * field.node_u(i);
    return field;
}

}  // namespace

TEST(AnnularDiameters, DistancesBetweenLandmarkPairs) {
    mvq::AnnularLandmarks lm;
    lm.sh = {0, 8, 1};
    lm.pam = {0, -8, 1};
    lm.mc = {10, 0, 0};
    lm.lc = {-10, 0, 0};
    const auto [d_ap, d_cc] = mvq::annular_diameters(lm);
    EXPECT_DOUBLE_EQ(d_ap, 16.0);
    EXPECT_DOUBLE_EQ(d_cc, 20.0);
}

TEST(AnnularLength, CircleCircumference) {
    const mvq::AnnulusCurve curve(ring(24, 15.0));
    const double want = mvq::kTwoPi * 15.0;
    EXPECT_NEAR(mvq::annular_length(curve), want, 1e-3 * want);
}

TEST(AnnularHeight, SaddleRange) {
    const mvq::AnnulusCurve curve(ring(24, 16.0, 3.0));
    EXPECT_NEAR(mvq::annular_height(curve, z_frame()), 6.0, 5e-3);

    // Height is measured along the frame normal regardless of the center.
    EXPECT_NEAR(mvq::annular_height(curve, z_frame({3.0, -2.0, 11.0})), 6.0, 5e-3);

    mvq::ValveFrame tilted = z_frame();
    tilted.n = mvq::normalized({0.0, 0.6, 0.8});
    tilted.r = {1.0, 0.0, 0.0};
    const double expected_tilted = [&] {
        double lo = 1e30, hi = -1e30;
        for (int i = 0; i < 4096; ++i) {
            const double h = mvq::dot(curve.sample(mvq::kTwoPi * i / 4096), tilted.n);
            lo = std::min(lo, h);
            hi = std::max(hi, h);
        }
        return hi - lo;
    }();
    EXPECT_NEAR(mvq::annular_height(curve, tilted), expected_tilted, 1e-6);
}

TEST(OrificeSurface, FlatDiskArea) {
    const double radius = 10.0;
    const mvq::AnnulusCurve curve(ring(24, radius));
    const auto orifice = mvq::orifice_surface(curve, z_frame());
    const double want = mvq::kPi * radius * radius;
    EXPECT_NEAR(orifice.area_mm2, want, 0.02 * want);

    // Nodes inside the ring are masked, far corners are not.
    const auto& f = orifice.field;
    bool center_masked = false;
    for (int j = 0; j < f.grid.nv && !center_masked; ++j)
        for (int i = 0; i < f.grid.nu && !center_masked; ++i)
            if (std::fabs(f.node_u(i)) < 0.3 && std::fabs(f.node_v(j)) < 0.3)
                center_masked = f.masked(i, j);
    EXPECT_TRUE(center_masked);
    EXPECT_FALSE(f.masked(0, 0));

    // A flat ring interpolates to a flat surface.
    double max_abs = 0.0;
    for (double v : f.values) max_abs = std::max(max_abs, std::fabs(v));
    EXPECT_LT(max_abs, 1e-6);
}

TEST(OrificeSurface, SaddleLiftExceedsFlatArea) {
    const mvq::AnnulusCurve flat(ring(24, 10.0));
    const mvq::AnnulusCurve saddle(ring(24, 10.0, 3.0));
    const double flat_area = mvq::orifice_surface(flat, z_frame()).area_mm2;
    const double saddle_area = mvq::orifice_surface(saddle, z_frame()).area_mm2;
    EXPECT_GT(saddle_area, flat_area + 1.0);
}

TEST(OrificeSurface, SharedGridIsRespected) {
    const mvq::AnnulusCurve curve(ring(24, 9.0));
    const auto first = mvq::orifice_surface(curve, z_frame());
    const auto second = mvq::orifice_surface(curve, z_frame(), 0.5, &first.field.grid);
    EXPECT_TRUE(second.field.same_grid(first.field));
    EXPECT_NEAR(second.area_mm2, first.area_mm2, 1e-12);
}

TEST(OrificeSurface, SelfIntersectingProjectionIsRejected) {
    // A limacon with an inner loop crosses itself at the pole.
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i) {
        const double t = mvq::kTwoPi * i / 12;
        const double r = 4.0 + 8.0 * std::cos(t);
        pts.push_back({r * std::cos(t), r * std::sin(t), 0.0});
    }
    const mvq::AnnulusCurve curve(pts);
    EXPECT_THROW(mvq::orifice_surface(curve, z_frame()), std::runtime_error);
}

TEST(PointInPolygon, UnitSquare) {
    const std::vector<double> pu = {0, 1, 1, 0};
    const std::vector<double> pv = {0, 0, 1, 1};
    EXPECT_TRUE(mvq::detail::point_in_polygon(0.5, 0.5, pu, pv));
    EXPECT_FALSE(mvq::detail::point_in_polygon(1.5, 0.5, pu, pv));
    EXPECT_FALSE(mvq::detail::point_in_polygon(-0.1, -0.1, pu, pv));
    EXPECT_FALSE(mvq::detail::point_in_polygon(0.5, 2.0, pu, pv));
}

TEST(LeafletLength, StraightRampSection) {
    const mvq::HeightField field = ramp_field(0.5);
    const Vec3 anchor{1.0, 0.0, 0.5};
    const Vec3 tip{9.0, 0.0, 4.5};
    mvq::Polyline3D section;
    const double len =
        mvq::leaflet_length(field, {0, 0, 0}, {0, 1, 0}, anchor, tip, &section);
    EXPECT_NEAR(len, std::sqrt(80.0), 1e-9);
    ASSERT_GE(section.points.size(), 2u);
    EXPECT_NEAR(mvq::distance(section.points.front(), anchor), 0.0, 1e-9);
    EXPECT_NEAR(mvq::distance(section.points.back(), tip), 0.0, 1e-9);
    EXPECT_NEAR(mvq::polyline_length(section), len, 1e-12);
}

TEST(LeafletLength, CurvedSectionExceedsChord) {
    mvq::HeightField field = ramp_field(0.0);
    for (int j = 0; j < field.grid.nv; ++j)
        for (int i = 0; i < field.grid.nu; ++i) {
            const double u = field.node_u(i);
            field.values[field.index(i, j)] = 0.1 * (u - 5.0) * (u - 5.0);
        }
    const Vec3 anchor{1.0, 0.0, 1.6};
    const Vec3 tip{9.0, 0.0, 1.6};
    const double len = mvq::leaflet_length(field, {0, 0, 0}, {0, 1, 0}, anchor, tip);
    EXPECT_GT(len, mvq::distance(anchor, tip) + 0.1);
}

TEST(LeafletLength, RejectsBadSections) {
    const mvq::HeightField field = ramp_field(0.5);
    // Plane parallel to the annular plane.
    EXPECT_THROW(
        mvq::leaflet_length(field, {0, 0, 0}, {0, 0, 1}, {1, 0, 0.5}, {9, 0, 4.5}),
        std::invalid_argument);
    // Anchor far outside the footprint.
    EXPECT_THROW(
        mvq::leaflet_length(field, {0, 0, 0}, {0, 1, 0}, {-10, 0, 0}, {9, 0, 4.5}),
        std::runtime_error);

    // A hole across the section path disconnects it.
    mvq::HeightField holed = field;
    for (int j = 0; j < holed.grid.nv; ++j)
        for (int i = 10; i <= 12; ++i) holed.mask[holed.index(i, j)] = 0;
    EXPECT_THROW(
        mvq::leaflet_length(holed, {0, 0, 0}, {0, 1, 0}, {1, 0, 0.5}, {9, 0, 4.5}),
        std::runtime_error);
}

TEST(LeafletArea, DelegatesToHeightFieldArea) {
    const mvq::HeightField field = ramp_field(0.3);
    EXPECT_DOUBLE_EQ(mvq::leaflet_area(field), mvq::height_field_area(field));
    EXPECT_GT(mvq::leaflet_area(field), 0.0);
}
