#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "mvq/mesh.hpp"

namespace mvq {

/// Windowed-sinc low-pass mesh filter. The transfer function is a Hamming-
/// windowed ideal low-pass in the normalized Laplacian eigenvalue variable,
/// expanded in Chebyshev polynomials of the uniform neighbor-average operator
/// and normalized to unit gain at zero frequency, so iterations = 0 is the
/// identity and flat regions are fixed points. Boundary vertices are smoothed
/// along their boundary neighbors only; connectivity is never changed.
inline TriangleMesh smooth_windowed_sinc(const TriangleMesh& mesh, int iterations,
                                         double passband) {
    if (mesh.empty()) throw std::invalid_argument("smooth_windowed_sinc: empty mesh");
    if (iterations < 0) throw std::invalid_argument("smooth_windowed_sinc: negative iterations");
    if (!(passband > 0.0) || passband > 2.0)
        throw std::invalid_argument("smooth_windowed_sinc: passband must be in (0, 2]");
    if (iterations == 0) return mesh;

    const std::size_t nv = mesh.vertices.size();

    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : mesh.triangles)
        for (int i = 0; i < 3; ++i) {
            int a = t[i], b = t[(i + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_count[{a, b}];
        }

    std::vector<std::vector<int>> neighbors(nv);
    std::vector<std::vector<int>> boundary_neighbors(nv);
    for (const auto& [edge, count] : edge_count) {
        neighbors[edge.first].push_back(edge.second);
        neighbors[edge.second].push_back(edge.first);
        if (count == 1) {
            boundary_neighbors[edge.first].push_back(edge.second);
            boundary_neighbors[edge.second].push_back(edge.first);
        }
    }
    // Boundary vertices relax along the boundary curve; non-manifold boundary
    // fans (≠ 2 boundary edges) stay fixed.
    std::vector<const std::vector<int>*> stencil(nv);
    std::vector<bool> fixed(nv, false);
    for (std::size_t v = 0; v < nv; ++v) {
        if (boundary_neighbors[v].empty()) {
            stencil[v] = &neighbors[v];
            if (neighbors[v].empty()) fixed[v] = true;
        } else if (boundary_neighbors[v].size() == 2) {
            stencil[v] = &boundary_neighbors[v];
        } else {
            stencil[v] = &boundary_neighbors[v];
            fixed[v] = true;
        }
    }

    // Hamming-windowed low-pass coefficients in the Chebyshev basis of
    // M = I - K/2 (K the neighbor-average Laplacian), eigenvalues cos θ.
    const int n = iterations;
    const double theta_pb = std::acos(1.0 - 0.5 * passband);
    std::vector<double> coeff(n + 1);
    double coeff_sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double window = 0.54 + 0.46 * std::cos(i * kPi / (n + 1));
        coeff[i] = (i == 0) ? window * theta_pb / kPi
                            : 2.0 * window * std::sin(i * theta_pb) / (i * kPi);
        coeff_sum += coeff[i];
    }
    for (double& c : coeff) c /= coeff_sum;

    auto apply_m = [&](const std::vector<Vec3>& x, std::vector<Vec3>& out) {
        for (std::size_t v = 0; v < nv; ++v) {
            if (fixed[v]) {
                out[v] = x[v];
                continue;
            }
            Vec3 avg{};
            for (int u : *stencil[v]) avg += x[u];
            avg = avg / static_cast<double>(stencil[v]->size());
            out[v] = (x[v] + avg) * 0.5;
        }
    };

    std::vector<Vec3> t_prev = mesh.vertices;
    std::vector<Vec3> t_cur(nv), t_next(nv), result(nv);
    apply_m(t_prev, t_cur);
    for (std::size_t v = 0; v < nv; ++v) result[v] = t_prev[v] * coeff[0] + t_cur[v] * coeff[1];
    for (int i = 2; i <= n; ++i) {
        apply_m(t_cur, t_next);
        for (std::size_t v = 0; v < nv; ++v) {
            t_next[v] = t_next[v] * 2.0 - t_prev[v];
            result[v] += t_next[v] * coeff[i];
        }
        std::swap(t_prev, t_cur);
        std::swap(t_cur, t_next);
    }

    TriangleMesh out = mesh;
    out.vertices = std::move(result);
    return out;
}

}  // namespace mvq
