#include "mvq/landmarks.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/periodic_spline.hpp"

namespace mvq {
namespace {

/// Saddle-shaped annulus: ellipse with the anatomical height profile
/// z(theta) = h1 cos2t + h2 cost + h3 cos3t, highest at theta = 0.
AnnulusCurve saddle_curve(double a, double b, double h1, double h2, double h3, int n = 96) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = kTwoPi * i / n;
        pts.push_back({a * std::cos(t), b * std::sin(t),
                       h1 * std::cos(2 * t) + h2 * std::cos(t) + h3 * std::cos(3 * t)});
    }
    return AnnulusCurve(pts);
}

ValveFrame z_frame() {
    ValveFrame f;
    f.x_c = {0, 0, 0};
    f.n = {0, 0, 1};
    f.r = {1, 0, 0};
    return f;
}

/// Brute-force 1D oracle over the curve's height profile: dense argmax for SH
/// and the two lowest local minima at least 60 degrees apart.
struct HeightOracle {
    double theta_sh;
    double theta_min_a, theta_min_b;
};

HeightOracle brute_force_extrema(const AnnulusCurve& curve, const ValveFrame& frame) {
    constexpr int n = 200000;
    std::vector<double> h(n);
    for (int i = 0; i < n; ++i) h[i] = frame.height(curve.sample(kTwoPi * i / n));

    HeightOracle oracle{};
    int i_max = 0;
    for (int i = 1; i < n; ++i)
        if (h[i] > h[i_max]) i_max = i;
    oracle.theta_sh = kTwoPi * i_max / n;

    struct M {
        double theta, h;
    };
    std::vector<M> minima;
    for (int i = 0; i < n; ++i) {
        const double prev = h[(i + n - 1) % n], next = h[(i + 1) % n];
        if (h[i] < prev && h[i] <= next) minima.push_back({kTwoPi * i / n, h[i]});
    }
    std::sort(minima.begin(), minima.end(), [](const M& x, const M& y) { return x.h < y.h; });
    oracle.theta_min_a = minima.at(0).theta;
    for (std::size_t i = 1; i < minima.size(); ++i) {
        if (angle_separation(minima[i].theta, oracle.theta_min_a) >= deg_to_rad(60.0)) {
            oracle.theta_min_b = minima[i].theta;
            return oracle;
        }
    }
    throw std::runtime_error("oracle: no second minimum");
}

TEST(DetectAnnularLandmarks, MatchesTheBruteForceOracle) {
    const AnnulusCurve curve = saddle_curve(18, 16, 3.0, 1.5, 0.6);
    const ValveFrame frame = z_frame();
    const AnnularLandmarks lm = detect_annular_landmarks(curve, frame);
    const HeightOracle oracle = brute_force_extrema(curve, frame);

    EXPECT_LT(angle_separation(lm.theta_sh, oracle.theta_sh), deg_to_rad(0.1));
    const double c1 = angle_separation(lm.theta_mc, oracle.theta_min_a) +
                      angle_separation(lm.theta_lc, oracle.theta_min_b);
    const double c2 = angle_separation(lm.theta_mc, oracle.theta_min_b) +
                      angle_separation(lm.theta_lc, oracle.theta_min_a);
    EXPECT_LT(std::min(c1, c2), deg_to_rad(0.2));
}

TEST(DetectAnnularLandmarks, PointsAndArcLengthsAreConsistent) {
    const AnnulusCurve curve = saddle_curve(18, 15, 2.5, 1.0, 0.5);
    const AnnularLandmarks lm = detect_annular_landmarks(curve, z_frame());

    EXPECT_NEAR(norm(lm.sh - curve.sample(lm.theta_sh)), 0.0, 1e-12);
    EXPECT_NEAR(norm(lm.pam - curve.sample(lm.theta_pam)), 0.0, 1e-12);
    EXPECT_NEAR(norm(lm.mc - curve.sample(lm.theta_mc)), 0.0, 1e-12);
    EXPECT_NEAR(norm(lm.lc - curve.sample(lm.theta_lc)), 0.0, 1e-12);
    EXPECT_NEAR(lm.s_sh, curve.arc_length(lm.theta_sh), 1e-9);
    EXPECT_NEAR(lm.s_pam, curve.arc_length(lm.theta_pam), 1e-9);
}

TEST(DetectAnnularLandmarks, PamIsTheArcLengthAntipode) {
    const AnnulusCurve curve = saddle_curve(20, 14, 3.0, 1.5, 0.6);
    const AnnularLandmarks lm = detect_annular_landmarks(curve, z_frame());
    const double total = curve.total_length();
    double gap = std::fmod(lm.s_pam - lm.s_sh + total, total);
    EXPECT_NEAR(gap, total / 2.0, 1e-6 * total);
}

TEST(DetectAnnularLandmarks, CommissuresAreSeparatedAndOrdered) {
    const AnnulusCurve curve = saddle_curve(18, 16, 3.0, 1.5, 0.6);
    const AnnularLandmarks lm = detect_annular_landmarks(curve, z_frame());

    EXPECT_GE(angle_separation(lm.theta_mc, lm.theta_lc), deg_to_rad(60.0));

    // Cyclic order around the ring: SH, one commissure, PAM, the other.
    auto offset = [&](double theta) { return wrap_angle(theta - lm.theta_sh); };
    const double o_pam = offset(lm.theta_pam);
    const double o_mc = offset(lm.theta_mc);
    const double o_lc = offset(lm.theta_lc);
    const bool mc_first = o_mc < o_pam && o_pam < o_lc;
    const bool lc_first = o_lc < o_pam && o_pam < o_mc;
    EXPECT_TRUE(mc_first || lc_first);
}

TEST(DetectAnnularLandmarks, ChiralityPicksLcConsistently) {
    // With n = +z and SH at +x, LC is the commissure with negative y: the
    // triple (SH to center, center to LC, n) must be right-handed.
    const AnnulusCurve curve = saddle_curve(18, 16, 3.0, 1.5, 0.6);
    const AnnularLandmarks lm = detect_annular_landmarks(curve, z_frame());
    EXPECT_LT(lm.lc.y, 0.0);
    EXPECT_GT(lm.mc.y, 0.0);

    // Moving SH to -x (negative h2 bias) puts LC on the +y side.
    std::vector<Vec3> pts;
    for (int i = 0; i < 96; ++i) {
        const double t = kTwoPi * i / 96;
        pts.push_back({18 * std::cos(t), 16 * std::sin(t),
                       3.0 * std::cos(2 * t) - 1.5 * std::cos(t) + 0.6 * std::cos(3 * t)});
    }
    const AnnularLandmarks lm2 = detect_annular_landmarks(AnnulusCurve(pts), z_frame());
    EXPECT_NEAR(angle_separation(lm2.theta_sh, kPi), 0.0, deg_to_rad(1.0));
    EXPECT_GT(lm2.lc.y, 0.0);
    EXPECT_LT(lm2.mc.y, 0.0);
}

TEST(DetectAnnularLandmarks, FlatProfileThrows) {
    std::vector<Vec3> flat;
    for (int i = 0; i < 32; ++i) {
        const double t = kTwoPi * i / 32;
        flat.push_back({15 * std::cos(t), 12 * std::sin(t), 0.0});
    }
    EXPECT_THROW(detect_annular_landmarks(AnnulusCurve(flat), z_frame()), std::runtime_error);
}

TEST(DetectAnnularLandmarks, SnapPamStaysWithinTenDegrees) {
    const AnnulusCurve curve = saddle_curve(18, 16, 3.0, 1.5, 0.6);
    const AnnularLandmarks plain = detect_annular_landmarks(curve, z_frame(), false);
    const AnnularLandmarks snapped = detect_annular_landmarks(curve, z_frame(), true);
    EXPECT_LE(angle_separation(snapped.theta_pam, plain.theta_pam), deg_to_rad(10.0) + 1e-9);
    EXPECT_NEAR(norm(snapped.pam - curve.sample(snapped.theta_pam)), 0.0, 1e-12);
}

TEST(DetectLeafletTips, FindsTheFarSectionPoints) {
    const AnnulusCurve curve = saddle_curve(18, 16, 3.0, 1.5, 0.6);
    const ValveFrame frame = z_frame();
    const AnnularLandmarks lm = detect_annular_landmarks(curve, frame);

    // Two slanted quads standing in for leaflets, crossing the SH-PAM plane.
    auto sheet = [&](double x0, double x1, double drop) {
        TriangleMesh m;
        m.vertices = {{x0, -8, 0}, {x1, -8, -drop}, {x1, 8, -drop}, {x0, 8, 0}};
        m.triangles = {{0, 1, 2}, {0, 2, 3}};
        return m;
    };
    const TriangleMesh anterior = sheet(14, 4, 2.0);
    const TriangleMesh posterior = sheet(-14, -4, 1.5);

    const LeafletTips tips = detect_leaflet_tips(anterior, posterior, lm, frame);
    EXPECT_NEAR(norm(tips.plane_point - lm.sh), 0.0, 1e-12);
    EXPECT_NEAR(dot(tips.plane_normal, lm.pam - lm.sh), 0.0, 1e-9);
    EXPECT_NEAR(dot(tips.plane_normal, frame.n), 0.0, 1e-9);

    // Each tip is the section point farthest from its own anchor (SH for the
    // anterior leaflet, PAM for the posterior), so both land on inner edges.
    EXPECT_NEAR(tips.anterior_tip.x, 4.0, 1e-9);
    EXPECT_NEAR(tips.anterior_tip.z, -2.0, 1e-9);
    EXPECT_NEAR(tips.posterior_tip.x, -4.0, 1e-9);
    EXPECT_NEAR(tips.posterior_tip.z, -1.5, 1e-9);

    EXPECT_THROW(detect_leaflet_tips(TriangleMesh{}, posterior, lm, frame),
                 std::invalid_argument);
    TriangleMesh away = sheet(30, 40, 1.0);
    for (auto& v : away.vertices) v.y += 100;
    EXPECT_THROW(detect_leaflet_tips(away, posterior, lm, frame), std::runtime_error);
}

}  // namespace
}  // namespace mvq
