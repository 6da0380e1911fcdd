#include "mvq/mesh.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mvq {
namespace {

/// Unit cube surface with outward-facing triangles.
TriangleMesh unit_cube() {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                  {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    m.triangles = {{0, 2, 1}, {0, 3, 2},   // z = 0
                   {4, 5, 6}, {4, 6, 7},   // z = 1
                   {0, 1, 5}, {0, 5, 4},   // y = 0
                   {2, 3, 7}, {2, 7, 6},   // y = 1
                   {1, 2, 6}, {1, 6, 5},   // x = 1
                   {3, 0, 4}, {3, 4, 7}};  // x = 0
    return m;
}

TriangleMesh octahedron(double radius = 1.0) {
    TriangleMesh m;
    m.vertices = {{radius, 0, 0},  {-radius, 0, 0}, {0, radius, 0},
                  {0, -radius, 0}, {0, 0, radius},  {0, 0, -radius}};
    m.triangles = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                   {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
    return m;
}

TEST(TriangleMesh, ValidateCatchesBadIndices) {
    TriangleMesh m = unit_cube();
    EXPECT_NO_THROW(m.validate_indices());
    m.triangles.push_back({0, 1, 8});
    EXPECT_THROW(m.validate_indices(), std::invalid_argument);
    m.triangles.back() = {0, 1, -1};
    EXPECT_THROW(m.validate_indices(), std::invalid_argument);
}

TEST(TriangleArea, HandValues) {
    EXPECT_DOUBLE_EQ(triangle_area({0, 0, 0}, {1, 0, 0}, {0, 1, 0}), 0.5);
    EXPECT_DOUBLE_EQ(triangle_area({0, 0, 0}, {2, 0, 0}, {0, 0, 3}), 3.0);
    EXPECT_DOUBLE_EQ(triangle_area({0, 0, 0}, {1, 1, 1}, {2, 2, 2}), 0.0);
}

TEST(SurfaceArea, CubeAndOctahedron) {
    EXPECT_DOUBLE_EQ(surface_area(unit_cube()), 6.0);
    EXPECT_NEAR(surface_area(octahedron(2.0)), 8.0 * 0.5 * std::sqrt(3.0) * 4.0, 1e-12);
    EXPECT_THROW(surface_area(TriangleMesh{}), std::invalid_argument);
}

TEST(SignedVolume, OutwardOrientationIsPositive) {
    EXPECT_NEAR(signed_volume(unit_cube()), 1.0, 1e-12);
    EXPECT_NEAR(signed_volume(octahedron(1.0)), 4.0 / 3.0, 1e-12);
    TriangleMesh flipped = unit_cube();
    for (auto& tri : flipped.triangles) std::swap(tri[1], tri[2]);
    EXPECT_NEAR(signed_volume(flipped), -1.0, 1e-12);
}

TEST(SignedVolume, TranslationInvariant) {
    TriangleMesh m = octahedron(1.5);
    const double before = signed_volume(m);
    for (auto& v : m.vertices) v += Vec3{100, -50, 20};
    EXPECT_NEAR(signed_volume(m), before, 1e-9);
}

TEST(PolylineLength, OpenAndClosed) {
    Polyline3D p;
    p.points = {{0, 0, 0}, {3, 0, 0}, {3, 4, 0}};
    EXPECT_DOUBLE_EQ(polyline_length(p), 7.0);
    p.closed = true;
    EXPECT_DOUBLE_EQ(polyline_length(p), 12.0);
    Polyline3D single;
    single.points = {{0, 0, 0}};
    EXPECT_THROW(polyline_length(single), std::invalid_argument);
}

TEST(Centroid, MeanOfPoints) {
    const Vec3 c = centroid({{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}});
    EXPECT_NEAR(norm(c - Vec3{0.5, 0.5, 0.5}), 0.0, 1e-15);
    EXPECT_THROW(centroid({}), std::invalid_argument);
}

TEST(RemoveDegenerateTriangles, DropsSliversKeepsRest) {
    TriangleMesh m = unit_cube();
    m.vertices.push_back({0.5, 0.5, 0.5});
    m.triangles.push_back({8, 8, 8});
    const TriangleMesh clean = remove_degenerate_triangles(m);
    EXPECT_EQ(clean.triangles.size(), 12u);
    EXPECT_NEAR(surface_area(clean), 6.0, 1e-12);
}

TEST(ConnectedComponents, SplitsDisjointShells) {
    TriangleMesh m = unit_cube();
    const TriangleMesh oct = octahedron(1.0);
    const int base = static_cast<int>(m.vertices.size());
    for (const auto& v : oct.vertices) m.vertices.push_back(v + Vec3{10, 0, 0});
    for (const auto& t : oct.triangles)
        m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});

    const auto parts = connected_components(m);
    ASSERT_EQ(parts.size(), 2u);
    const double a0 = surface_area(parts[0]), a1 = surface_area(parts[1]);
    EXPECT_NEAR(std::max(a0, a1), 4.0 * std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(std::min(a0, a1), 6.0, 1e-12);
}

TEST(EulerCharacteristic, SphereTopology) {
    EXPECT_EQ(euler_characteristic(unit_cube()), 2);
    EXPECT_EQ(euler_characteristic(octahedron(1.0)), 2);
}

TEST(Transformed, RigidMotionPreservesAreaAndVolume) {
    const TriangleMesh m = octahedron(2.0);
    const RigidTransform t = make_rigid_transform(Vec3{1, 1, 0}, 1.1, Vec3{-4, 2, 9});
    const TriangleMesh r = transformed(m, t);
    EXPECT_NEAR(surface_area(r), surface_area(m), 1e-9);
    EXPECT_NEAR(signed_volume(r), signed_volume(m), 1e-9);
    EXPECT_NEAR(norm(r.vertices[0] - t.apply_point(m.vertices[0])), 0.0, 1e-12);
}

TEST(SaveObj, WritesLoadableText) {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "mvq_mesh_test.obj";
    save_obj(unit_cube(), path.string());
    std::ifstream in(path);
    ASSERT_TRUE(in.good());
    std::string word;
    int nv = 0, nf = 0;
    while (in >> word) {
        if (word == "v") ++nv;
        if (word == "f") ++nf;
        std::string rest;
        std::getline(in, rest);
    }
    EXPECT_EQ(nv, 8);
    EXPECT_EQ(nf, 12);
    fs::remove(path);
}

}  // namespace
}  // namespace mvq
