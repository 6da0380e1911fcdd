#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/height_field.hpp"
#include "mvq/landmarks.hpp"
#include "mvq/mesh.hpp"
#include "mvq/periodic_spline.hpp"
#include "mvq/rbf.hpp"

namespace mvq {

/// D_AP = |SH - PAM| and D_CC = |MC - LC|.
inline std::pair<double, double> annular_diameters(const AnnularLandmarks& landmarks) {
    return {distance(landmarks.sh, landmarks.pam), distance(landmarks.mc, landmarks.lc)};
}

/// Skeleton perimeter by adaptive quadrature.
inline double annular_length(const AnnulusCurve& curve) { return curve.total_length(); }

/// Height of the bounding box whose axis is fixed to the valve normal:
/// the range of the curve's coordinate along n.
inline double annular_height(const AnnulusCurve& curve, const ValveFrame& frame) {
    frame.validate();
    auto height_at = [&](double theta) { return frame.height(curve.sample(theta)); };
    constexpr int kSamples = 4096;
    int i_min = 0, i_max = 0;
    std::vector<double> h(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        h[i] = height_at(kTwoPi * i / kSamples);
        if (h[i] < h[i_min]) i_min = i;
        if (h[i] > h[i_max]) i_max = i;
    }
    const double step = kTwoPi / kSamples;
    const double lo = height_at(
        detail::refine_extremum(height_at, (i_min - 1) * step, (i_min + 1) * step, false));
    const double hi = height_at(
        detail::refine_extremum(height_at, (i_max - 1) * step, (i_max + 1) * step, true));
    return hi - lo;
}

struct OrificeSurface {
    HeightField field;
    double area_mm2 = 0.0;
};

namespace detail {

inline bool point_in_polygon(double u, double v, const std::vector<double>& pu,
                             const std::vector<double>& pv) {
    bool inside = false;
    const std::size_t n = pu.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((pv[i] > v) != (pv[j] > v) &&
            u < (pu[j] - pu[i]) * (v - pv[i]) / (pv[j] - pv[i]) + pu[i])
            inside = !inside;
    }
    return inside;
}

inline bool segments_cross(double ax, double ay, double bx, double by, double cx, double cy,
                           double dx, double dy) {
    auto orient = [](double ox, double oy, double px, double py, double qx, double qy) {
        return (px - ox) * (qy - oy) - (py - oy) * (qx - ox);
    };
    const double o1 = orient(ax, ay, bx, by, cx, cy);
    const double o2 = orient(ax, ay, bx, by, dx, dy);
    const double o3 = orient(cx, cy, dx, dy, ax, ay);
    const double o4 = orient(cx, cy, dx, dy, bx, by);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

}  // namespace detail

/// Interpolates the annulus heights over the enclosed region with a thin
/// plate spline and integrates the lifted surface area. Full interior cells
/// contribute two lifted triangles; cells crossing the boundary are resolved
/// on a 16x16 subcell grid against the projected polygon.
inline OrificeSurface orifice_surface(const AnnulusCurve& curve, const ValveFrame& frame,
                                      double resolution = 0.5,
                                      const GridSpec* shared_grid = nullptr,
                                      int curve_samples = 256) {
    frame.validate();
    std::vector<double> pu(curve_samples), pv(curve_samples), ph(curve_samples);
    std::vector<Vec3> world(curve_samples);
    for (int i = 0; i < curve_samples; ++i) {
        world[i] = curve.sample(kTwoPi * i / curve_samples);
        plane_coordinates(frame, world[i], pu[i], pv[i], ph[i]);
    }
    for (int i = 0; i < curve_samples; ++i) {
        for (int j = i + 1; j < curve_samples; ++j) {
            if (j == i + 1 || (i == 0 && j == curve_samples - 1)) continue;
            const int jn = (j + 1) % curve_samples;
            if (detail::segments_cross(pu[i], pv[i], pu[i + 1], pv[i + 1], pu[j], pv[j], pu[jn],
                                       pv[jn]))
                throw std::runtime_error("orifice_surface: projected annulus curve self-intersects");
        }
    }

    const RbfSurface tps(pu, pv, ph, RbfKernel::kThinPlate, 0.0);

    OrificeSurface out;
    out.field.frame = frame;
    out.field.grid = shared_grid ? *shared_grid : make_grid(frame, world, resolution, 2.0 * resolution);
    const GridSpec& grid = out.field.grid;
    const std::size_t n_nodes = static_cast<std::size_t>(grid.nu) * grid.nv;
    out.field.values.resize(n_nodes);
    out.field.mask.assign(n_nodes, 0);
    for (int j = 0; j < grid.nv; ++j) {
        for (int i = 0; i < grid.nu; ++i) {
            const double u = out.field.node_u(i), v = out.field.node_v(j);
            out.field.values[out.field.index(i, j)] = tps(u, v);
            out.field.mask[out.field.index(i, j)] = detail::point_in_polygon(u, v, pu, pv) ? 1 : 0;
        }
    }

    constexpr int kSub = 16;
    double area = 0.0;
    for (int j = 0; j + 1 < grid.nv; ++j) {
        for (int i = 0; i + 1 < grid.nu; ++i) {
            const bool c00 = out.field.mask[out.field.index(i, j)] != 0;
            const bool c10 = out.field.mask[out.field.index(i + 1, j)] != 0;
            const bool c01 = out.field.mask[out.field.index(i, j + 1)] != 0;
            const bool c11 = out.field.mask[out.field.index(i + 1, j + 1)] != 0;
            const double h00 = out.field.values[out.field.index(i, j)];
            const double h10 = out.field.values[out.field.index(i + 1, j)];
            const double h01 = out.field.values[out.field.index(i, j + 1)];
            const double h11 = out.field.values[out.field.index(i + 1, j + 1)];
            const double u_base = out.field.node_u(i), v_base = out.field.node_v(j);
            const double res = grid.resolution;
            auto lifted = [&](double a, double b) {
                const double h = h00 * (1 - a) * (1 - b) + h10 * a * (1 - b) + h01 * (1 - a) * b +
                                 h11 * a * b;
                return out.field.point_at(u_base + a * res, v_base + b * res, h);
            };
            if (c00 && c10 && c01 && c11) {
                const Vec3 p00 = lifted(0, 0), p10 = lifted(1, 0);
                const Vec3 p01 = lifted(0, 1), p11 = lifted(1, 1);
                area += triangle_area(p00, p10, p11) + triangle_area(p00, p11, p01);
                continue;
            }
            if (!c00 && !c10 && !c01 && !c11) {
                // The boundary may still clip a cell without claiming a corner.
                bool any = false;
                for (int k = 0; k < curve_samples && !any; ++k)
                    any = pu[k] >= u_base && pu[k] <= u_base + res && pv[k] >= v_base &&
                          pv[k] <= v_base + res;
                if (!any) continue;
            }
            for (int sj = 0; sj < kSub; ++sj) {
                for (int si = 0; si < kSub; ++si) {
                    const double a = (si + 0.5) / kSub, b = (sj + 0.5) / kSub;
                    if (!detail::point_in_polygon(u_base + a * res, v_base + b * res, pu, pv))
                        continue;
                    const double a0 = static_cast<double>(si) / kSub, a1 = (si + 1.0) / kSub;
                    const double b0 = static_cast<double>(sj) / kSub, b1 = (sj + 1.0) / kSub;
                    const Vec3 q00 = lifted(a0, b0), q10 = lifted(a1, b0);
                    const Vec3 q01 = lifted(a0, b1), q11 = lifted(a1, b1);
                    area += triangle_area(q00, q10, q11) + triangle_area(q00, q11, q01);
                }
            }
        }
    }
    out.area_mm2 = area;
    return out;
}

/// Arc length of the middle surface's section with the SH-PAM plane, clipped
/// between the projections of the annular anchor and the leaflet tip. The
/// optional out parameter receives the lifted section polyline.
inline double leaflet_length(const HeightField& field, const Vec3& plane_point,
                             const Vec3& plane_normal, const Vec3& anchor, const Vec3& tip,
                             Polyline3D* section_out = nullptr) {
    const ValveFrame& frame = field.frame;
    const Vec3 m = normalized(plane_normal);
    if (std::fabs(dot(m, frame.n)) > 1e-6)
        throw std::invalid_argument("leaflet_length: plane is not perpendicular to the annular plane");

    // Trace of the plane in (u, v) coordinates: a*u + b*v = c.
    const double a = dot(frame.r, m);
    const double b = dot(frame.t(), m);
    const double c = dot(plane_point - frame.x_c, m);
    const double nrm = std::hypot(a, b);
    const double q0u = c * a / (nrm * nrm), q0v = c * b / (nrm * nrm);
    const double wu = b / nrm, wv = -a / nrm;

    auto line_param = [&](const Vec3& p) {
        double u, v, h;
        plane_coordinates(frame, p, u, v, h);
        return (u - q0u) * wu + (v - q0v) * wv;
    };
    const double s_anchor = line_param(anchor);
    const double s_tip = line_param(tip);

    const double step = 0.5 * field.grid.resolution;
    const int n_steps = std::max(2, static_cast<int>(std::ceil(std::fabs(s_tip - s_anchor) / step)));

    Polyline3D section;
    section.closed = false;
    int leading_skipped = 0, gap_run = 0, max_gap_run = 0;
    bool started = false;
    int trailing_skipped = 0;
    for (int k = 0; k <= n_steps; ++k) {
        const double s = s_anchor + (s_tip - s_anchor) * k / n_steps;
        const double u = q0u + s * wu, v = q0v + s * wv;
        double h;
        if (field.interpolate(u, v, h)) {
            section.points.push_back(field.point_at(u, v, h));
            started = true;
            max_gap_run = std::max(max_gap_run, gap_run);
            gap_run = 0;
            trailing_skipped = 0;
        } else if (!started) {
            ++leading_skipped;
        } else {
            ++gap_run;
            ++trailing_skipped;
        }
    }
    const int max_clip = static_cast<int>(std::ceil(4.0 * field.grid.resolution / step));
    if (section.points.size() < 2 || leading_skipped > max_clip || trailing_skipped > max_clip)
        throw std::runtime_error(
            "leaflet_length: anchor and tip do not bracket the plane section of the surface");
    if (max_gap_run > 2)
        throw std::runtime_error(
            "leaflet_length: plane section is not connected between anchor and tip");

    if (section_out) *section_out = section;
    return polyline_length(section);
}

/// Area of the masked middle surface.
inline double leaflet_area(const HeightField& field) { return height_field_area(field); }

}  // namespace mvq
