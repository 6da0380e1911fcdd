#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/height_field.hpp"
#include "mvq/landmarks.hpp"
#include "mvq/mesh.hpp"
#include "mvq/rbf.hpp"

namespace mvq {

namespace detail {

/// Marks grid nodes covered by the projected triangles, then applies one
/// binary closing pass so pinholes at shared edges do not punch through.
inline std::vector<std::uint8_t> project_footprint(const TriangleMesh& mesh,
                                                   const ValveFrame& frame, const GridSpec& grid) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(grid.nu) * grid.nv, 0);
    auto node_index = [&](int i, int j) { return static_cast<std::size_t>(j) * grid.nu + i; };

    std::vector<double> us(mesh.vertices.size()), vs(mesh.vertices.size());
    for (std::size_t k = 0; k < mesh.vertices.size(); ++k) {
        double h;
        plane_coordinates(frame, mesh.vertices[k], us[k], vs[k], h);
    }
    for (const auto& tri : mesh.triangles) {
        const double u1 = us[tri[0]], v1 = vs[tri[0]];
        const double u2 = us[tri[1]], v2 = vs[tri[1]];
        const double u3 = us[tri[2]], v3 = vs[tri[2]];
        const int i_lo = std::max(0, static_cast<int>(std::ceil((std::min({u1, u2, u3}) - grid.u0) / grid.resolution - 1e-9)));
        const int i_hi = std::min(grid.nu - 1, static_cast<int>(std::floor((std::max({u1, u2, u3}) - grid.u0) / grid.resolution + 1e-9)));
        const int j_lo = std::max(0, static_cast<int>(std::ceil((std::min({v1, v2, v3}) - grid.v0) / grid.resolution - 1e-9)));
        const int j_hi = std::min(grid.nv - 1, static_cast<int>(std::floor((std::max({v1, v2, v3}) - grid.v0) / grid.resolution + 1e-9)));
        const double det = (u2 - u1) * (v3 - v1) - (u3 - u1) * (v2 - v1);
        if (std::fabs(det) < 1e-15) continue;
        for (int j = j_lo; j <= j_hi; ++j) {
            for (int i = i_lo; i <= i_hi; ++i) {
                const double pu = grid.u0 + i * grid.resolution;
                const double pv = grid.v0 + j * grid.resolution;
                const double w1 = ((u2 - pu) * (v3 - pv) - (u3 - pu) * (v2 - pv)) / det;
                const double w2 = ((u3 - pu) * (v1 - pv) - (u1 - pu) * (v3 - pv)) / det;
                const double w3 = 1.0 - w1 - w2;
                if (w1 >= -1e-9 && w2 >= -1e-9 && w3 >= -1e-9) mask[node_index(i, j)] = 1;
            }
        }
    }

    auto pass = [&](const std::vector<std::uint8_t>& in, std::uint8_t grow) {
        std::vector<std::uint8_t> out(in.size(), 0);
        for (int j = 0; j < grid.nv; ++j) {
            for (int i = 0; i < grid.nu; ++i) {
                bool hit = (grow == 0);
                for (int dj = -1; dj <= 1 && hit == (grow == 0); ++dj) {
                    for (int di = -1; di <= 1; ++di) {
                        const int ii = i + di, jj = j + dj;
                        const bool on = ii >= 0 && jj >= 0 && ii < grid.nu && jj < grid.nv &&
                                        in[node_index(ii, jj)] != 0;
                        if (grow != 0 && on) {
                            hit = true;
                            break;
                        }
                        if (grow == 0 && !on) {
                            hit = false;
                            break;
                        }
                    }
                }
                out[node_index(i, j)] = hit ? 1 : 0;
            }
        }
        return out;
    };
    return pass(pass(mask, 1), 0);
}

}  // namespace detail

/// Fits the leaflet middle surface: a ridge-regularized polyharmonic rho^5 RBF
/// through all vertex heights over the annular plane, evaluated on the grid.
/// lambda < 0 selects the default 1e-3 * N * mean_spacing^5; lambda = 0 is
/// exact interpolation. Large inputs are binned to at most max_centers sites
/// when regularization is active.
inline HeightField fit_middle_surface(const TriangleMesh& mesh, const ValveFrame& frame,
                                      double resolution = 0.5, double lambda = -1.0,
                                      const GridSpec* shared_grid = nullptr,
                                      std::size_t max_centers = 2000) {
    if (mesh.vertices.empty()) throw std::invalid_argument("fit_middle_surface: empty mesh");
    frame.validate();

    HeightField field;
    field.frame = frame;
    field.grid = shared_grid ? *shared_grid
                             : make_grid(frame, mesh.vertices, resolution, 2.0 * resolution);
    const GridSpec& grid = field.grid;

    std::vector<double> u(mesh.vertices.size()), v(mesh.vertices.size()), h(mesh.vertices.size());
    for (std::size_t k = 0; k < mesh.vertices.size(); ++k)
        plane_coordinates(frame, mesh.vertices[k], u[k], v[k], h[k]);

    // Height-function sanity: bucket vertices per nearest node and require the
    // per-bucket height spread to stay near the typical (thickness) spread.
    {
        std::map<std::pair<int, int>, std::pair<double, double>> spread;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const int i = static_cast<int>(std::lround((u[k] - grid.u0) / grid.resolution));
            const int j = static_cast<int>(std::lround((v[k] - grid.v0) / grid.resolution));
            auto [it, inserted] = spread.try_emplace({i, j}, std::pair<double, double>{h[k], h[k]});
            if (!inserted) {
                it->second.first = std::min(it->second.first, h[k]);
                it->second.second = std::max(it->second.second, h[k]);
            }
        }
        std::vector<double> spreads;
        spreads.reserve(spread.size());
        for (const auto& [key, mm] : spread) spreads.push_back(mm.second - mm.first);
        std::sort(spreads.begin(), spreads.end());
        const double median = spreads[spreads.size() / 2];
        std::size_t ok = 0;
        for (double s : spreads) ok += (s <= 2.0 * median + 1e-9);
        if (ok * 10 < spreads.size() * 9)
            throw std::runtime_error(
                "fit_middle_surface: mesh does not project as a height function over the plane");
    }

    // Optional binning keeps the dense solve tractable on full-size meshes.
    if (lambda != 0.0 && u.size() > max_centers) {
        double bin = grid.resolution;
        std::map<std::pair<int, int>, std::array<double, 4>> bins;
        for (;;) {
            bins.clear();
            for (std::size_t k = 0; k < u.size(); ++k) {
                const int i = static_cast<int>(std::floor(u[k] / bin));
                const int j = static_cast<int>(std::floor(v[k] / bin));
                auto& acc = bins[{i, j}];
                acc[0] += u[k];
                acc[1] += v[k];
                acc[2] += h[k];
                acc[3] += 1.0;
            }
            if (bins.size() <= max_centers) break;
            bin *= 1.5;
        }
        std::vector<double> bu, bv, bh;
        bu.reserve(bins.size());
        bv.reserve(bins.size());
        bh.reserve(bins.size());
        for (const auto& [key, acc] : bins) {
            bu.push_back(acc[0] / acc[3]);
            bv.push_back(acc[1] / acc[3]);
            bh.push_back(acc[2] / acc[3]);
        }
        u = std::move(bu);
        v = std::move(bv);
        h = std::move(bh);
    }

    if (lambda < 0.0) {
        const auto [u_lo, u_hi] = std::minmax_element(u.begin(), u.end());
        const auto [v_lo, v_hi] = std::minmax_element(v.begin(), v.end());
        const double area = std::max(1e-12, (*u_hi - *u_lo) * (*v_hi - *v_lo));
        const double spacing = std::sqrt(area / static_cast<double>(u.size()));
        lambda = 1e-3 * static_cast<double>(u.size()) * std::pow(spacing, 5);
    }

    const RbfSurface rbf(u, v, h, RbfKernel::kPolyharmonic5, lambda);

    field.mask = detail::project_footprint(mesh, frame, grid);
    field.values.assign(static_cast<std::size_t>(grid.nu) * grid.nv, 0.0);
    for (int j = 0; j < grid.nv; ++j)
        for (int i = 0; i < grid.nu; ++i)
            field.values[field.index(i, j)] = rbf(field.node_u(i), field.node_v(j));
    return field;
}

/// Grid nodes where the two middle surfaces pass within eps of each other.
struct CoaptationCandidates {
    std::vector<Vec3> points;                     // lifted at the mean height
    std::vector<std::pair<int, int>> nodes;       // (i, j) per point
    double epsilon = 0.0;                         // tolerance the search ended at
    std::vector<double> epsilon_history;          // every tolerance tried
    bool found = false;
};

/// Realizes the near-contact set: |h_AL - h_PL| < eps on the masks'
/// intersection. The tolerance doubles (capped at eps_max) while the set is
/// empty or still growing, so the result is the stable contact band rather
/// than an accidental handful of near-exact crossings.
inline CoaptationCandidates find_coaptation_candidates(const HeightField& anterior,
                                                       const HeightField& posterior,
                                                       double eps = 0.001,
                                                       double eps_max = 1.0) {
    if (!anterior.same_grid(posterior))
        throw std::invalid_argument("find_coaptation_candidates: mismatched grids");
    if (!(eps > 0.0) || eps > eps_max)
        throw std::invalid_argument("find_coaptation_candidates: eps must be in (0, eps_max]");

    auto count_at = [&](double e) {
        std::size_t n = 0;
        for (std::size_t k = 0; k < anterior.values.size(); ++k)
            if (anterior.mask[k] && posterior.mask[k] &&
                std::fabs(anterior.values[k] - posterior.values[k]) < e)
                ++n;
        return n;
    };

    CoaptationCandidates out;
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (;;) {
        out.epsilon_history.push_back(eps);
        const std::size_t count = count_at(eps);
        if ((count > 0 && count == prev) || eps >= eps_max) {
            out.epsilon = eps;
            out.found = count > 0;
            break;
        }
        prev = count;
        eps = std::min(eps * 2.0, eps_max);
    }

    for (int j = 0; j < anterior.grid.nv; ++j) {
        for (int i = 0; i < anterior.grid.nu; ++i) {
            const std::size_t k = anterior.index(i, j);
            if (!anterior.mask[k] || !posterior.mask[k]) continue;
            if (std::fabs(anterior.values[k] - posterior.values[k]) >= out.epsilon) continue;
            const double mean = 0.5 * (anterior.values[k] + posterior.values[k]);
            out.points.push_back(anterior.point_at(anterior.node_u(i), anterior.node_v(j), mean));
            out.nodes.emplace_back(i, j);
        }
    }
    return out;
}

/// Coaptation line as two quintic polynomials of the inter-commissural
/// coordinate, fit by least squares over the candidate set.
struct CoaptationCurve {
    Vec3 origin;            // frame center the axes hang off
    Vec3 axis_u, axis_v, axis_n;
    double u_min = 0, u_max = 0;
    std::array<double, 6> v_coeffs{};  // in the scaled coordinate t in [-1, 1]
    std::array<double, 6> h_coeffs{};
    double rms_mm = 0.0;
    std::size_t n_points = 0;
    Polyline3D polyline;

    double scaled(double u) const { return (2.0 * u - (u_min + u_max)) / (u_max - u_min); }

    Vec3 evaluate(double u) const {
        const double t = scaled(u);
        double tv = 0.0, th = 0.0, p = 1.0;
        for (int d = 0; d < 6; ++d) {
            tv += v_coeffs[d] * p;
            th += h_coeffs[d] * p;
            p *= t;
        }
        return origin + axis_u * u + axis_v * tv + axis_n * th;
    }
};

inline CoaptationCurve fit_coaptation_line(const std::vector<Vec3>& candidates,
                                           const AnnularLandmarks& landmarks,
                                           const ValveFrame& frame) {
    if (candidates.size() < 12)
        throw std::invalid_argument("fit_coaptation_line: fewer than 12 candidate points");

    CoaptationCurve curve;
    curve.origin = frame.x_c;
    curve.axis_n = frame.n;
    Vec3 axis = landmarks.lc - landmarks.mc;
    axis = axis - frame.n * dot(axis, frame.n);
    if (norm(axis) < 1e-9)
        throw std::runtime_error("fit_coaptation_line: commissural axis degenerate in the plane");
    curve.axis_u = normalized(axis);
    curve.axis_v = cross(frame.n, curve.axis_u);

    const std::size_t n = candidates.size();
    std::vector<double> u(n), v(n), h(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 d = candidates[k] - curve.origin;
        u[k] = dot(d, curve.axis_u);
        v[k] = dot(d, curve.axis_v);
        h[k] = dot(d, curve.axis_n);
    }
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    curve.u_min = *lo;
    curve.u_max = *hi;
    if (curve.u_max - curve.u_min < 1e-9)
        throw std::runtime_error("fit_coaptation_line: candidates degenerate along the axis");

    Eigen::MatrixXd vander(n, 6);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = curve.scaled(u[k]);
        double p = 1.0;
        for (int d = 0; d < 6; ++d) {
            vander(k, d) = p;
            p *= t;
        }
    }
    const auto qr = vander.colPivHouseholderQr();
    const Eigen::VectorXd cv = qr.solve(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
    const Eigen::VectorXd ch = qr.solve(Eigen::Map<const Eigen::VectorXd>(h.data(), n));
    for (int d = 0; d < 6; ++d) {
        curve.v_coeffs[d] = cv(d);
        curve.h_coeffs[d] = ch(d);
    }

    double sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Eigen::VectorXd row = vander.row(k).transpose();
        const double dv = v[k] - row.dot(cv);
        const double dh = h[k] - row.dot(ch);
        sq += dv * dv + dh * dh;
    }
    curve.rms_mm = std::sqrt(sq / static_cast<double>(n));
    curve.n_points = n;

    curve.polyline.closed = false;
    curve.polyline.points.reserve(100);
    for (int k = 0; k < 100; ++k)
        curve.polyline.points.push_back(
            curve.evaluate(curve.u_min + (curve.u_max - curve.u_min) * k / 99.0));
    return curve;
}

}  // namespace mvq
