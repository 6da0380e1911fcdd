#include "mvq/height_field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/geometry.hpp"
#include "mvq/mesh.hpp"

namespace mvq {
namespace {

ValveFrame z_frame() {
    ValveFrame f;
    f.x_c = {0, 0, 0};
    f.n = {0, 0, 1};
    f.r = {1, 0, 0};
    return f;
}

HeightField full_field(int nu, int nv, double res) {
    HeightField f;
    f.frame = z_frame();
    f.grid.u0 = 0;
    f.grid.v0 = 0;
    f.grid.resolution = res;
    f.grid.nu = nu;
    f.grid.nv = nv;
    f.values.assign(static_cast<std::size_t>(nu) * nv, 0.0);
    f.mask.assign(f.values.size(), 1);
    return f;
}

TEST(PlaneCoordinates, RoundTripsThroughPointAt) {
    ValveFrame f;
    f.x_c = {3, -1, 2};
    f.n = normalized({1, 1, 1});
    f.r = normalized(Vec3{1, -1, 0});
    const HeightField field = [&] {
        HeightField hf;
        hf.frame = f;
        return hf;
    }();
    const Vec3 p{7.5, -2.25, 4.0};
    double u, v, h;
    plane_coordinates(f, p, u, v, h);
    EXPECT_NEAR(norm(field.point_at(u, v, h) - p), 0.0, 1e-12);
}

TEST(MakeGrid, CoversPointsWithMarginAndAlignsNodes) {
    const std::vector<Vec3> pts = {{1.3, 2.7, 0}, {8.9, 4.1, 1}, {3.0, -2.2, -1}};
    const GridSpec g = make_grid(z_frame(), pts, 0.5, 2.0);

    EXPECT_NEAR(std::remainder(g.u0, 0.5), 0.0, 1e-12);
    EXPECT_NEAR(std::remainder(g.v0, 0.5), 0.0, 1e-12);
    EXPECT_LE(g.u0, 1.3 - 2.0);
    EXPECT_LE(g.v0, -2.2 - 2.0);
    EXPECT_GE(g.u0 + (g.nu - 1) * 0.5, 8.9 + 2.0);
    EXPECT_GE(g.v0 + (g.nv - 1) * 0.5, 4.1 + 2.0);

    EXPECT_THROW(make_grid(z_frame(), {}, 0.5, 1.0), std::invalid_argument);
    EXPECT_THROW(make_grid(z_frame(), pts, 0.0, 1.0), std::invalid_argument);
}

TEST(MakeGrid, IndependentPointSetsShareNodePositions) {
    const std::vector<Vec3> a = {{0.3, 0.4, 0}, {5.1, 6.2, 0}};
    const std::vector<Vec3> b = {{-2.8, 1.9, 0}, {7.7, 3.3, 0}};
    const GridSpec ga = make_grid(z_frame(), a, 0.5, 1.0);
    const GridSpec gb = make_grid(z_frame(), b, 0.5, 1.0);
    EXPECT_NEAR(std::remainder(ga.u0 - gb.u0, 0.5), 0.0, 1e-12);
    EXPECT_NEAR(std::remainder(ga.v0 - gb.v0, 0.5), 0.0, 1e-12);
}

TEST(HeightFieldArea, FlatFullMaskIsTheCellCount) {
    const HeightField f = full_field(5, 4, 0.5);
    EXPECT_NEAR(height_field_area(f), 4 * 3 * 0.25, 1e-12);
}

TEST(HeightFieldArea, TiltedPlaneScalesByInverseCosine) {
    HeightField f = full_field(11, 11, 0.5);
    const double slope = 2.0;
    for (int j = 0; j < 11; ++j)
        for (int i = 0; i < 11; ++i) f.values[f.index(i, j)] = slope * f.node_u(i);
    const double base = 10 * 10 * 0.25;
    EXPECT_NEAR(height_field_area(f), base * std::sqrt(1.0 + slope * slope), 1e-9);
}

TEST(HeightFieldArea, MaskGatesCells) {
    HeightField f = full_field(3, 3, 1.0);
    // Unmask the grid-corner node: its only incident cell drops to three
    // corners and contributes half a cell.
    f.mask[f.index(0, 0)] = 0;
    EXPECT_NEAR(height_field_area(f), 3.5, 1e-12);

    // Mask down to a single node: no cell has 3 corners left.
    HeightField lone = full_field(3, 3, 1.0);
    for (auto& m : lone.mask) m = 0;
    lone.mask[lone.index(1, 1)] = 1;
    EXPECT_NEAR(height_field_area(lone), 0.0, 1e-12);

    HeightField empty = full_field(3, 3, 1.0);
    for (auto& m : empty.mask) m = 0;
    EXPECT_THROW(height_field_area(empty), std::invalid_argument);
}

TEST(HeightFieldInterpolate, BilinearValuesAndMaskBoundary) {
    HeightField f = full_field(3, 3, 1.0);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) f.values[f.index(i, j)] = i + 10.0 * j;
    double h = 0;
    ASSERT_TRUE(f.interpolate(0.5, 0.5, h));
    EXPECT_NEAR(h, 0.5 + 10.0 * 0.5, 1e-12);
    ASSERT_TRUE(f.interpolate(1.25, 1.75, h));
    EXPECT_NEAR(h, 1.25 + 10.0 * 1.75, 1e-12);

    f.mask[f.index(2, 2)] = 0;
    EXPECT_FALSE(f.interpolate(1.5, 1.5, h));
    EXPECT_FALSE(f.interpolate(-0.5, 0.5, h));
    EXPECT_FALSE(f.interpolate(2.5, 0.5, h));
}

TEST(HeightFieldMesh, MatchesAreaOnFullCells) {
    HeightField f = full_field(6, 5, 0.5);
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 6; ++i) f.values[f.index(i, j)] = 0.3 * f.node_u(i) - 0.1 * f.node_v(j);
    const TriangleMesh m = height_field_mesh(f);
    m.validate_indices();
    EXPECT_EQ(m.vertices.size(), 30u);
    EXPECT_EQ(m.triangles.size(), 2u * 5 * 4);
    EXPECT_NEAR(surface_area(m), height_field_area(f), 1e-12);
}

TEST(LeafletHeightField, SubtractsOnTheMaskIntersection) {
    HeightField leaflet = full_field(4, 4, 1.0);
    HeightField orifice = full_field(4, 4, 1.0);
    for (std::size_t k = 0; k < leaflet.values.size(); ++k) {
        leaflet.values[k] = 3.0;
        orifice.values[k] = 1.0;
    }
    leaflet.mask[leaflet.index(0, 0)] = 0;
    orifice.mask[orifice.index(3, 3)] = 0;

    SignedFieldSummary summary;
    const HeightField diff = leaflet_height_field(leaflet, orifice, &summary);
    EXPECT_EQ(diff.masked_count(), 14u);
    EXPECT_EQ(summary.n, 14u);
    EXPECT_DOUBLE_EQ(summary.min, 2.0);
    EXPECT_DOUBLE_EQ(summary.max, 2.0);
    EXPECT_DOUBLE_EQ(summary.mean, 2.0);
    EXPECT_EQ(diff.mask[diff.index(0, 0)], 0);
    EXPECT_EQ(diff.mask[diff.index(3, 3)], 0);
    EXPECT_DOUBLE_EQ(diff.values[diff.index(1, 1)], 2.0);
}

TEST(LeafletHeightField, SignIsAtrialPositive) {
    HeightField leaflet = full_field(3, 3, 1.0);
    HeightField orifice = full_field(3, 3, 1.0);
    for (auto& v : leaflet.values) v = -2.0;
    SignedFieldSummary summary;
    leaflet_height_field(leaflet, orifice, &summary);
    EXPECT_DOUBLE_EQ(summary.max, -2.0);
    EXPECT_DOUBLE_EQ(summary.min, -2.0);
}

TEST(LeafletHeightField, RejectsMismatchedOrDisjointInputs) {
    HeightField a = full_field(3, 3, 1.0);
    HeightField b = full_field(4, 3, 1.0);
    EXPECT_THROW(leaflet_height_field(a, b), std::invalid_argument);

    HeightField c = full_field(3, 3, 1.0);
    HeightField d = full_field(3, 3, 1.0);
    for (int i = 0; i < 3; ++i) {
        c.mask[c.index(i, 0)] = 0;
        c.mask[c.index(i, 1)] = 0;
        d.mask[d.index(i, 2)] = 0;
    }
    EXPECT_THROW(leaflet_height_field(c, d), std::runtime_error);
}

}  // namespace
}  // namespace mvq
