#include "mvq/smoothing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "mvq/marching_cubes.hpp"
#include "mvq/mesh.hpp"

namespace mvq {
namespace {

LabeledVolume sphere_volume(double radius, double spacing) {
    const int n = static_cast<int>(std::ceil(2 * radius / spacing)) + 6;
    LabeledVolume v;
    v.dims = {n, n, n};
    v.spacing = {spacing, spacing, spacing};
    v.origin = {0, 0, 0};
    v.labels.assign(static_cast<std::size_t>(n) * n * n, 0);
    const Vec3 c = v.voxel_center(n / 2, n / 2, n / 2);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                if (distance(v.voxel_center(i, j, k), c) <= radius) v.at(i, j, k) = 1;
    return v;
}

double radius_rms_error(const TriangleMesh& mesh, const Vec3& center, double radius) {
    double sum = 0.0;
    for (const auto& p : mesh.vertices) {
        const double e = distance(p, center) - radius;
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(mesh.vertices.size()));
}

TEST(WindowedSinc, ReducesVoxelizationRoughnessWithoutShrinking) {
    const double radius = 8.0, spacing = 0.5;
    const LabeledVolume v = sphere_volume(radius, spacing);
    const Vec3 c = v.voxel_center(v.dims[0] / 2, v.dims[1] / 2, v.dims[2] / 2);

    const TriangleMesh raw = extract_surface(v, 1);
    const TriangleMesh smooth = smooth_windowed_sinc(raw, 20, 0.1);

    EXPECT_LT(radius_rms_error(smooth, c, radius), 0.5 * radius_rms_error(raw, c, radius));

    const double analytic_volume = 4.0 / 3.0 * kPi * radius * radius * radius;
    EXPECT_NEAR(signed_volume(smooth), analytic_volume, 0.03 * analytic_volume);

    const double analytic_area = 4.0 * kPi * radius * radius;
    EXPECT_NEAR(surface_area(smooth), analytic_area, 0.03 * analytic_area);
}

TEST(WindowedSinc, KeepsConnectivity) {
    const TriangleMesh raw = extract_surface(sphere_volume(4.0, 0.5), 1);
    const TriangleMesh smooth = smooth_windowed_sinc(raw, 20, 0.1);
    ASSERT_EQ(smooth.vertices.size(), raw.vertices.size());
    ASSERT_EQ(smooth.triangles.size(), raw.triangles.size());
    for (std::size_t i = 0; i < raw.triangles.size(); ++i)
        EXPECT_EQ(smooth.triangles[i], raw.triangles[i]);
    EXPECT_EQ(euler_characteristic(smooth), 2);
}

TEST(WindowedSinc, FlatRegionStaysFlat) {
    // A flat triangulated sheet is already band-limited; the filter must not
    // bend it.
    TriangleMesh sheet;
    const int n = 12;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            sheet.vertices.push_back({static_cast<double>(i), static_cast<double>(j), 2.0});
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int a = j * (n + 1) + i;
            sheet.triangles.push_back({a, a + 1, a + n + 2});
            sheet.triangles.push_back({a, a + n + 2, a + n + 1});
        }
    const TriangleMesh smooth = smooth_windowed_sinc(sheet, 20, 0.1);
    for (const auto& p : smooth.vertices) EXPECT_NEAR(p.z, 2.0, 1e-9);
}

TEST(WindowedSinc, ZeroIterationsIsIdentity) {
    const TriangleMesh raw = extract_surface(sphere_volume(3.0, 0.5), 1);
    const TriangleMesh same = smooth_windowed_sinc(raw, 0, 0.1);
    ASSERT_EQ(same.vertices.size(), raw.vertices.size());
    for (std::size_t i = 0; i < raw.vertices.size(); ++i)
        EXPECT_NEAR(norm(same.vertices[i] - raw.vertices[i]), 0.0, 1e-15);
}

TEST(WindowedSinc, RejectsBadParameters) {
    const TriangleMesh raw = extract_surface(sphere_volume(3.0, 0.5), 1);
    EXPECT_THROW(smooth_windowed_sinc(raw, -1, 0.1), std::invalid_argument);
    EXPECT_THROW(smooth_windowed_sinc(raw, 5, 0.0), std::invalid_argument);
    EXPECT_THROW(smooth_windowed_sinc(raw, 5, 2.5), std::invalid_argument);
    EXPECT_THROW(smooth_windowed_sinc(TriangleMesh{}, 5, 0.1), std::invalid_argument);
}

}  // namespace
}  // namespace mvq
