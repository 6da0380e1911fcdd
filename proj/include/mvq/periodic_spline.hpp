#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mvq/geometry.hpp"

namespace mvq {

namespace detail {

/// Adaptive Simpson quadrature with absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 48);
}

}  // namespace detail

/// Closed C²-periodic cubic spline through ordered control points, parameterized
/// by section angle θ over one period of 2π, with an arc-length lookup.
class AnnulusCurve {
public:
    AnnulusCurve() = default;

    /// Interpolates the ordered points. Knot angles default to uniform; when
    /// given they must be strictly increasing within one period (the pipeline
    /// passes surviving section angles so skipped sections keep their angular
    /// extent). Consecutive duplicate points are removed.
    AnnulusCurve(std::vector<Vec3> points, std::vector<double> knot_angles = {}) {
        if (!knot_angles.empty() && knot_angles.size() != points.size())
            throw std::invalid_argument("AnnulusCurve: knot count does not match point count");

        // Dedup consecutive duplicates, including the wrap-around pair.
        std::vector<Vec3> pts;
        std::vector<double> angles;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!pts.empty() && distance(points[i], pts.back()) < 1e-12) continue;
            pts.push_back(points[i]);
            if (!knot_angles.empty()) angles.push_back(knot_angles[i]);
        }
        if (pts.size() > 1 && distance(pts.front(), pts.back()) < 1e-12) {
            pts.pop_back();
            if (!angles.empty()) angles.pop_back();
        }
        const std::size_t m = pts.size();
        if (m < 4) throw std::invalid_argument("AnnulusCurve: fewer than 4 distinct points");

        if (angles.empty()) {
            angles.resize(m);
            for (std::size_t i = 0; i < m; ++i) angles[i] = kTwoPi * static_cast<double>(i) / m;
        } else {
            for (std::size_t i = 0; i + 1 < m; ++i)
                if (!(angles[i + 1] > angles[i]))
                    throw std::invalid_argument("AnnulusCurve: knot angles must be strictly increasing");
            if (!(angles.back() - angles.front() < kTwoPi))
                throw std::invalid_argument("AnnulusCurve: knot angles must span less than one period");
        }

        points_ = std::move(pts);
        knots_ = std::move(angles);
        solve_moments();
        build_arc_table();
    }

    const std::vector<Vec3>& control_points() const { return points_; }
    const std::vector<double>& knots() const { return knots_; }

    /// Position at angular parameter θ (wraps modulo 2π).
    Vec3 sample(double theta) const { return eval<0>(theta); }
    /// dC/dθ at θ.
    Vec3 derivative(double theta) const { return eval<1>(theta); }
    /// d²C/dθ² at θ.
    Vec3 second_derivative(double theta) const { return eval<2>(theta); }

    /// Total arc length, adaptive quadrature (relative error ≤ 1e-6).
    double total_length() const { return total_length_; }

    /// Arc length from the first knot to θ, increasing over one period.
    double arc_length(double theta) const {
        const double t = wrap_param(theta);
        const std::size_t i = locate(t);
        return cumulative_[i] + segment_length(knots_[i], t);
    }

    /// Inverse of arc_length: parameter at arc length s ∈ [0, total).
    double theta_at_arc_length(double s) const {
        double target = std::fmod(s, total_length_);
        if (target < 0) target += total_length_;
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
        double lo = knots_[i];
        double hi = (i + 1 < knots_.size()) ? knots_[i + 1] : knots_.front() + kTwoPi;
        double remaining = target - cumulative_[i];
        // Bisection on the monotone in-segment arc length.
        for (int iter = 0; iter < 60; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (segment_length(knots_[i], mid) < remaining)
                lo = mid;
            else
                hi = mid;
        }
        return wrap_angle(0.5 * (lo + hi));
    }

    Vec3 sample_at_arc_length(double s) const { return sample(theta_at_arc_length(s)); }

private:
    std::vector<Vec3> points_;
    std::vector<double> knots_;
    std::vector<Vec3> moments_;       // second derivatives at knots
    std::vector<double> cumulative_;  // arc length at each knot
    double total_length_ = 0.0;

    double wrap_param(double theta) const {
        const double base = knots_.front();
        double t = std::fmod(theta - base, kTwoPi);
        if (t < 0) t += kTwoPi;
        return base + t;
    }

    double interval(std::size_t i) const {
        const double next = (i + 1 < knots_.size()) ? knots_[i + 1] : knots_.front() + kTwoPi;
        return next - knots_[i];
    }

    std::size_t locate(double t) const {
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        if (it == knots_.begin()) return 0;
        return static_cast<std::size_t>(it - knots_.begin()) - 1;
    }

    void solve_moments() {
        const std::size_t m = points_.size();
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
        Eigen::MatrixXd rhs(m, 3);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t prev = (i + m - 1) % m;
            const std::size_t next = (i + 1) % m;
            const double h_prev = interval(prev);
            const double h = interval(i);
            a(i, prev) += h_prev / 6.0;
            a(i, i) += (h_prev + h) / 3.0;
            a(i, next) += h / 6.0;
            const Vec3 d = (points_[next] - points_[i]) / h - (points_[i] - points_[prev]) / h_prev;
            rhs(i, 0) = d.x;
            rhs(i, 1) = d.y;
            rhs(i, 2) = d.z;
        }
        const Eigen::MatrixXd sol = a.partialPivLu().solve(rhs);
        moments_.resize(m);
        for (std::size_t i = 0; i < m; ++i) moments_[i] = {sol(i, 0), sol(i, 1), sol(i, 2)};
    }

    template <int Order>
    Vec3 eval(double theta) const {
        const double t = wrap_param(theta);
        const std::size_t i = locate(t);
        const std::size_t next = (i + 1) % points_.size();
        const double h = interval(i);
        const double du = t - knots_[i];   // distance from left knot
        const double dv = h - du;          // distance to right knot
        const Vec3& ma = moments_[i];
        const Vec3& mb = moments_[next];
        const Vec3& pa = points_[i];
        const Vec3& pb = points_[next];
        if constexpr (Order == 0) {
            return ma * (dv * dv * dv / (6.0 * h)) + mb * (du * du * du / (6.0 * h)) +
                   (pa / h - ma * (h / 6.0)) * dv + (pb / h - mb * (h / 6.0)) * du;
        } else if constexpr (Order == 1) {
            return ma * (-dv * dv / (2.0 * h)) + mb * (du * du / (2.0 * h)) +
                   (pb - pa) / h - (mb - ma) * (h / 6.0);
        } else {
            return ma * (dv / h) + mb * (du / h);
        }
    }

    double segment_length(double from, double to) const {
        auto speed = [this](double t) { return norm(derivative(t)); };
        return detail::integrate(speed, from, to, 1e-10 * std::max(1.0, total_hint_));
    }

    double total_hint_ = 1.0;

    void build_arc_table() {
        // Chord length as the tolerance scale for the quadrature.
        double chord = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i)
            chord += distance(points_[i], points_[(i + 1) % points_.size()]);
        total_hint_ = chord;

        cumulative_.resize(knots_.size());
        double s = 0.0;
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            cumulative_[i] = s;
            const double next = (i + 1 < knots_.size()) ? knots_[i + 1] : knots_.front() + kTwoPi;
            s += segment_length(knots_[i], next);
        }
        total_length_ = s;
    }
};

/// Interpolates ordered skeleton centres with a closed periodic cubic spline.
inline AnnulusCurve fit_periodic_spline(const std::vector<Vec3>& centers,
                                        const std::vector<double>& section_angles = {}) {
    return AnnulusCurve(centers, section_angles);
}

}  // namespace mvq
