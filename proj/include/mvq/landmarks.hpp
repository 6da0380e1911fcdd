#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/mesh.hpp"
#include "mvq/periodic_spline.hpp"
#include "mvq/section.hpp"

namespace mvq {

/// The four annular landmarks, each with the curve angle and arc length at
/// which it lies.
struct AnnularLandmarks {
    Vec3 sh, pam, mc, lc;
    double theta_sh = 0, theta_pam = 0, theta_mc = 0, theta_lc = 0;
    double s_sh = 0, s_pam = 0, s_mc = 0, s_lc = 0;
};

/// Leaflet free-edge tips and the SH-PAM plane they were sectioned with.
struct LeafletTips {
    Vec3 anterior_tip, posterior_tip;
    Vec3 plane_point, plane_normal;
};

namespace detail {

/// Polishes an extremum of f bracketed by [lo, hi] via ternary search.
template <typename F>
double refine_extremum(const F& f, double lo, double hi, bool maximize) {
    for (int i = 0; i < 80; ++i) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        const bool keep_left = maximize ? (f(m1) > f(m2)) : (f(m1) < f(m2));
        if (keep_left)
            hi = m2;
        else
            lo = m1;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Finds SH (highest point along n), the commissures MC/LC (two lowest height
/// minima at least 60 degrees apart), and PAM (arc-length antipode of SH).
/// When snap_pam is set, PAM slides to the nearest in-window curvature minimum
/// within 10 degrees of the antipode.
inline AnnularLandmarks detect_annular_landmarks(const AnnulusCurve& curve, const ValveFrame& frame,
                                                 bool snap_pam = false) {
    frame.validate();
    auto height_at = [&](double theta) { return frame.height(curve.sample(theta)); };

    constexpr int kSamples = 4096;
    std::vector<double> h(kSamples);
    double h_min = 1e300, h_max = -1e300;
    for (int i = 0; i < kSamples; ++i) {
        h[i] = height_at(kTwoPi * i / kSamples);
        h_min = std::min(h_min, h[i]);
        h_max = std::max(h_max, h[i]);
    }
    if (h_max - h_min < 1e-9)
        throw std::runtime_error("detect_annular_landmarks: height profile is flat, no distinct minima");

    const double step = kTwoPi / kSamples;
    AnnularLandmarks out;

    int i_max = 0;
    for (int i = 1; i < kSamples; ++i)
        if (h[i] > h[i_max]) i_max = i;
    out.theta_sh = wrap_angle(
        detail::refine_extremum(height_at, (i_max - 1) * step, (i_max + 1) * step, true));

    struct Minimum {
        double theta, height;
    };
    std::vector<Minimum> minima;
    for (int i = 0; i < kSamples; ++i) {
        const double prev = h[(i + kSamples - 1) % kSamples];
        const double next = h[(i + 1) % kSamples];
        if (h[i] < prev && h[i] <= next) {
            const double theta =
                detail::refine_extremum(height_at, (i - 1) * step, (i + 1) * step, false);
            minima.push_back({wrap_angle(theta), height_at(theta)});
        }
    }
    std::sort(minima.begin(), minima.end(),
              [](const Minimum& a, const Minimum& b) { return a.height < b.height; });

    if (minima.size() < 2)
        throw std::runtime_error("detect_annular_landmarks: fewer than two distinct height minima");
    const Minimum first = minima.front();
    const Minimum* second = nullptr;
    for (std::size_t i = 1; i < minima.size(); ++i) {
        if (angle_separation(minima[i].theta, first.theta) >= deg_to_rad(60.0)) {
            second = &minima[i];
            break;
        }
    }
    if (!second)
        throw std::runtime_error(
            "detect_annular_landmarks: fewer than two height minima separated by 60 degrees");

    // PAM: half the perimeter away from SH along the curve.
    const double total = curve.total_length();
    out.s_sh = curve.arc_length(out.theta_sh);
    out.theta_pam = curve.theta_at_arc_length(out.s_sh + 0.5 * total);
    if (snap_pam) {
        auto curvature = [&](double theta) {
            const Vec3 d1 = curve.derivative(theta);
            const Vec3 d2 = curve.second_derivative(theta);
            const double speed = norm(d1);
            return norm(cross(d1, d2)) / (speed * speed * speed);
        };
        const double window = deg_to_rad(10.0);
        double best = out.theta_pam, best_k = curvature(out.theta_pam);
        for (int i = -40; i <= 40; ++i) {
            const double theta = out.theta_pam + window * i / 40.0;
            const double k = curvature(theta);
            if (k < best_k) {
                best_k = k;
                best = theta;
            }
        }
        out.theta_pam = wrap_angle(best);
    }

    out.sh = curve.sample(out.theta_sh);
    out.pam = curve.sample(out.theta_pam);
    out.s_pam = curve.arc_length(out.theta_pam);

    // LC is the commissure making (SH -> x_c, x_c -> commissure, n) right-handed.
    const Vec3 to_center = frame.x_c - out.sh;
    auto lc_score = [&](double theta) {
        return dot(cross(to_center, curve.sample(theta) - frame.x_c), frame.n);
    };
    double theta_a = first.theta, theta_b = second->theta;
    if (lc_score(theta_a) < lc_score(theta_b)) std::swap(theta_a, theta_b);
    out.theta_lc = theta_a;
    out.theta_mc = theta_b;
    out.lc = curve.sample(out.theta_lc);
    out.mc = curve.sample(out.theta_mc);
    out.s_lc = curve.arc_length(out.theta_lc);
    out.s_mc = curve.arc_length(out.theta_mc);
    return out;
}

/// Sections each leaflet with the plane through SH and PAM perpendicular to
/// the annular plane, and returns the section point farthest from the
/// leaflet's own annular anchor.
inline LeafletTips detect_leaflet_tips(const TriangleMesh& anterior, const TriangleMesh& posterior,
                                       const AnnularLandmarks& landmarks, const ValveFrame& frame) {
    if (distance(landmarks.sh, landmarks.pam) < 1e-9)
        throw std::invalid_argument("detect_leaflet_tips: SH and PAM coincide");
    if (anterior.vertices.empty() || posterior.vertices.empty())
        throw std::invalid_argument("detect_leaflet_tips: empty leaflet mesh");

    LeafletTips out;
    out.plane_point = landmarks.sh;
    const Vec3 span = landmarks.pam - landmarks.sh;
    const Vec3 normal = cross(span, frame.n);
    if (norm(normal) < 1e-9)
        throw std::runtime_error("detect_leaflet_tips: SH-PAM axis is parallel to the valve normal");
    out.plane_normal = normalized(normal);

    auto farthest_from = [&](const TriangleMesh& mesh, const Vec3& anchor, const char* name) {
        const auto lines = plane_section(mesh, out.plane_point, out.plane_normal);
        const Vec3* best = nullptr;
        double best_d = -1.0;
        for (const auto& line : lines) {
            for (const auto& p : line.points) {
                const double d = distance(p, anchor);
                if (d > best_d) {
                    best_d = d;
                    best = &p;
                }
            }
        }
        if (!best)
            throw std::runtime_error(std::string("detect_leaflet_tips: ") + name +
                                     " leaflet does not intersect the SH-PAM plane");
        return *best;
    };
    out.anterior_tip = farthest_from(anterior, landmarks.sh, "anterior");
    out.posterior_tip = farthest_from(posterior, landmarks.pam, "posterior");
    return out;
}

}  // namespace mvq
