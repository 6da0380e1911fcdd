#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/landmarks.hpp"
#include "mvq/metrics.hpp"
#include "mvq/morphometry.hpp"
#include "mvq/periodic_spline.hpp"
#include "mvq/volume.hpp"

namespace mvq {

/// Parameters of the synthetic valve. The annulus centerline is an ellipse
/// (d_ap across SH-PAM, d_cc across the commissures) with height profile
/// z = h1 cos2t + h2 cost + h3 cos3t; h1 digs the commissural saddle, h2
/// raises SH above PAM, h3 sharpens the saddle horn so it stays the highest
/// point relative to the fitted plane. The leaflets coapt over a band of
/// half-width coapt_overlap around the designed contact arc, the anterior
/// sheet riding coapt_separation above the posterior one.
struct PhantomParams {
    double d_cc = 36.0;
    double d_ap = 32.0;
    double h1 = 3.0;
    double h2 = 1.5;
    double h3 = 0.6;
    double tube_radius = 1.0;
    double leaflet_thickness = 1.2;
    double coaptation_offset = 0.4;   // fraction from the commissural chord toward PAM
    double coaptation_dip = 1.5;      // contact line sag below the commissure line
    double coapt_overlap = 1.5;       // half-width of the leaflet overlap band
    double coapt_separation = 0.4;    // vertical gap between the two sheets in the band
    double sag_anterior = 1.8;        // belly sag of each leaflet
    double sag_posterior = 1.2;
    double prolapse_bump = 0.0;       // designed max height above the orifice surface
    double spacing = 0.4;
    double gap_arc_deg = 0.0;         // annulus arc deliberately deleted
    double gap_center_deg = 120.0;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw std::invalid_argument(std::string("PhantomParams: ") + name + " must be positive");
        };
        positive(d_cc, "d_cc");
        positive(d_ap, "d_ap");
        positive(tube_radius, "tube_radius");
        positive(leaflet_thickness, "leaflet_thickness");
        positive(spacing, "spacing");
        positive(coaptation_dip, "coaptation_dip");
        positive(coapt_overlap, "coapt_overlap");
        positive(coapt_separation, "coapt_separation");
        positive(sag_anterior, "sag_anterior");
        positive(sag_posterior, "sag_posterior");
        if (coapt_separation >= leaflet_thickness)
            throw std::invalid_argument(
                "PhantomParams: coapt_separation must be below leaflet_thickness so the "
                "sheets stay in contact");
        if (h1 < 0 || h2 < 0 || h3 < 0)
            throw std::invalid_argument("PhantomParams: height coefficients must be non-negative");
        if (prolapse_bump < 0) throw std::invalid_argument("PhantomParams: prolapse_bump must be >= 0");
        if (gap_arc_deg < 0 || gap_arc_deg >= 360)
            throw std::invalid_argument("PhantomParams: gap_arc_deg must be in [0, 360)");
        if (!(coaptation_offset > 0.0) || !(coaptation_offset < 1.0))
            throw std::invalid_argument("PhantomParams: coaptation_offset must be in (0, 1)");
        if (spacing > tube_radius)
            throw std::invalid_argument("PhantomParams: spacing too coarse to resolve the annulus tube");
        if (spacing > leaflet_thickness)
            throw std::invalid_argument("PhantomParams: spacing too coarse to resolve the leaflet thickness");
    }
};

/// Reference measurements computed from the analytic geometry, independent of
/// any voxelization. Distances in mm, areas in mm².
struct AnalyticTruth {
    PhantomParams params;
    bool has_landmarks = false;

    double d_ap = 0, d_cc = 0, l_a = 0, h_a = 0, annulus_area = 0;
    double anterior_length = 0, posterior_length = 0;
    double anterior_area = 0, posterior_area = 0;
    double leaflet_height_max = 0;  // max anterior height above the orifice surface

    Vec3 sh, pam, mc, lc, anterior_tip, posterior_tip;
    double theta_sh = 0, theta_pam = 0, theta_mc = 0, theta_lc = 0;

    Vec3 center, normal, radial;     // truth valve frame
    Vec3 atrial_direction;
    std::vector<Vec3> coaptation_arc;  // designed contact curve samples
    std::vector<Vec3> centerline;      // dense annulus skeleton samples
};

namespace detail {

/// Signed angular travel from `from` to `to` that passes through `via`.
inline double arc_through(double from, double to, double via) {
    const double ccw = wrap_angle(to - from);
    const double via_off = wrap_angle(via - from);
    return (via_off <= ccw) ? ccw : ccw - kTwoPi;
}

/// Analytic phantom geometry: calibrated centerline, arc-length-weighted
/// plane, numeric landmarks, designed contact curve, and leaflet patches.
class PhantomGeometry {
public:
    explicit PhantomGeometry(const PhantomParams& params) : p_(params) {
        p_.validate();
        a_ = 0.5 * p_.d_ap;
        b_ = 0.5 * p_.d_cc;
        solve_frame();
        flat_ = height_range().second - height_range().first < 1e-9;
        if (!flat_) {
            // Calibrate the semi-axes so the landmark distances reproduce the
            // requested diameters exactly.
            for (int iter = 0; iter < 6; ++iter) {
                solve_landmarks();
                a_ *= p_.d_ap / distance(sh_, pam_);
                b_ *= p_.d_cc / distance(mc_, lc_);
                solve_frame();
            }
            solve_landmarks();
            setup_contact();
        }
        build_centerline_tree();
    }

    const PhantomParams& params() const { return p_; }
    bool flat() const { return flat_; }
    const ValveFrame& frame() const { return frame_; }

    Vec3 centerline(double theta) const {
        return {a_ * std::cos(theta), b_ * std::sin(theta), z_profile(theta)};
    }
    Vec3 centerline_derivative(double theta) const {
        return {-a_ * std::sin(theta), b_ * std::cos(theta),
                -2.0 * p_.h1 * std::sin(2.0 * theta) - p_.h2 * std::sin(theta) -
                    3.0 * p_.h3 * std::sin(3.0 * theta)};
    }
    double speed(double theta) const { return norm(centerline_derivative(theta)); }

    double total_length() const {
        return integrate([this](double t) { return speed(t); }, 0.0, kTwoPi, 1e-9 * (a_ + b_));
    }

    double height(const Vec3& q) const { return frame_.height(q); }

    std::pair<double, double> height_range() const {
        auto height_at = [this](double t) { return frame_.height(centerline(t)); };
        constexpr int kSamples = 4096;
        int i_min = 0, i_max = 0;
        std::vector<double> h(kSamples);
        for (int i = 0; i < kSamples; ++i) {
            h[i] = height_at(kTwoPi * i / kSamples);
            if (h[i] < h[i_min]) i_min = i;
            if (h[i] > h[i_max]) i_max = i;
        }
        const double step = kTwoPi / kSamples;
        const double lo =
            height_at(refine_extremum(height_at, (i_min - 1) * step, (i_min + 1) * step, false));
        const double hi =
            height_at(refine_extremum(height_at, (i_max - 1) * step, (i_max + 1) * step, true));
        return {lo, hi};
    }

    double theta_sh() const { return theta_sh_; }
    double theta_pam() const { return theta_pam_; }
    double theta_mc() const { return theta_mc_; }
    double theta_lc() const { return theta_lc_; }
    Vec3 sh() const { return sh_; }
    Vec3 pam() const { return pam_; }
    Vec3 mc() const { return mc_; }
    Vec3 lc() const { return lc_; }

    /// Designed contact curve from MC (t=0) to LC (t=1).
    Vec3 contact(double t) const {
        const double s = std::sin(kPi * t);
        const double u = std::lerp(uv_mc_[0], uv_lc_[0], t) + beta_ * s * d_post_[0];
        const double v = std::lerp(uv_mc_[1], uv_lc_[1], t) + beta_ * s * d_post_[1];
        const double h = std::lerp(h_mc_, h_lc_, t) - p_.coaptation_dip * s;
        return frame_.x_c + frame_.r * u + frame_.t() * v + frame_.n * h;
    }

    /// Overlap half-width, tapered to zero toward the commissures.
    double overlap_halfwidth(double t) const {
        return p_.coapt_overlap * std::min(1.0, std::min(t, 1.0 - t) / 0.06);
    }

    /// Leaflet middle patches; t runs MC to LC, w annulus to free edge. The
    /// body (w below the split) blends the annulus arc into the near edge of
    /// the overlap band; past the split the sheet crosses the band at constant
    /// offset from the contact arc, anterior above and posterior below.
    Vec3 anterior(double t, double w) const {
        const Vec3 d = in_plane(d_post_);
        const Vec3 join =
            contact(t) - d * overlap_halfwidth(t) + frame_.n * (0.5 * p_.coapt_separation);
        const double bump = prolapse_amp_ * std::sin(kPi * t);
        if (w <= kFlapSplit) {
            const double s = w / kFlapSplit;
            return centerline(theta_mc_ + t * delta_ant_) * (1.0 - s) + join * s -
                   frame_.n * (p_.sag_anterior * s * (1.0 - s)) + frame_.n * (bump * s * s);
        }
        const double s = (w - kFlapSplit) / (1.0 - kFlapSplit);
        return join + d * (2.0 * overlap_halfwidth(t) * s) + frame_.n * bump;
    }
    Vec3 posterior(double t, double w) const {
        const Vec3 d = in_plane(d_post_);
        const Vec3 join =
            contact(t) + d * overlap_halfwidth(t) - frame_.n * (0.5 * p_.coapt_separation);
        if (w <= kFlapSplit) {
            const double s = w / kFlapSplit;
            return centerline(theta_mc_ + t * delta_post_) * (1.0 - s) + join * s -
                   frame_.n * (p_.sag_posterior * s * (1.0 - s));
        }
        const double s = (w - kFlapSplit) / (1.0 - kFlapSplit);
        return join - d * (2.0 * overlap_halfwidth(t) * s);
    }

    void set_prolapse_amplitude(double amp) { prolapse_amp_ = amp; }
    double prolapse_amplitude() const { return prolapse_amp_; }

    /// Distance from a point to the analytic centerline.
    double centerline_distance(const Vec3& q) const {
        const auto [idx, coarse] = tree_->nearest(q);
        const double step = kTwoPi / static_cast<double>(tree_thetas_.size());
        auto f = [&](double t) { return squared_norm(centerline(t) - q); };
        const double t0 = tree_thetas_[idx];
        const double t = refine_extremum(f, t0 - 2.0 * step, t0 + 2.0 * step, false);
        return std::min(coarse, distance(centerline(t), q));
    }

    bool in_gap(double theta) const {
        if (p_.gap_arc_deg <= 0.0) return false;
        return angle_separation(theta, deg_to_rad(p_.gap_center_deg)) <=
               0.5 * deg_to_rad(p_.gap_arc_deg);
    }

    Vec3 in_plane(const std::array<double, 2>& uv) const {
        return frame_.r * uv[0] + frame_.t() * uv[1];
    }

    /// In-plane coordinates and height of a world point.
    void plane_uvh(const Vec3& q, double& u, double& v, double& h) const {
        const Vec3 d = q - frame_.x_c;
        u = dot(d, frame_.r);
        v = dot(d, frame_.t());
        h = dot(d, frame_.n);
    }

private:
    static constexpr double kFlapSplit = 0.85;  // w where the body meets the band

    PhantomParams p_;
    double a_ = 0, b_ = 0;
    bool flat_ = false;
    ValveFrame frame_;
    double theta_sh_ = 0, theta_pam_ = 0, theta_mc_ = 0, theta_lc_ = 0;
    Vec3 sh_, pam_, mc_, lc_;
    std::array<double, 2> uv_mc_{}, uv_lc_{}, d_post_{};
    double h_mc_ = 0, h_lc_ = 0, beta_ = 0;
    double delta_ant_ = 0, delta_post_ = 0;
    double prolapse_amp_ = 0;
    std::unique_ptr<KdTree3> tree_;
    std::vector<double> tree_thetas_;

    double z_profile(double theta) const {
        return p_.h1 * std::cos(2.0 * theta) + p_.h2 * std::cos(theta) +
               p_.h3 * std::cos(3.0 * theta);
    }

    void solve_frame() {
        constexpr int kSamples = 4096;
        double wsum = 0.0;
        Vec3 c{};
        std::vector<Vec3> pts(kSamples);
        std::vector<double> wts(kSamples);
        for (int i = 0; i < kSamples; ++i) {
            const double theta = kTwoPi * i / kSamples;
            pts[i] = centerline(theta);
            wts[i] = speed(theta);
            c = c + pts[i] * wts[i];
            wsum += wts[i];
        }
        c = c / wsum;
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (int i = 0; i < kSamples; ++i) {
            const Eigen::Vector3d d(pts[i].x - c.x, pts[i].y - c.y, pts[i].z - c.z);
            cov += wts[i] * d * d.transpose();
        }
        cov /= wsum;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
        Vec3 n{solver.eigenvectors()(0, 0), solver.eigenvectors()(1, 0), solver.eigenvectors()(2, 0)};
        Vec3 r{solver.eigenvectors()(0, 2), solver.eigenvectors()(1, 2), solver.eigenvectors()(2, 2)};
        if (n.z < 0) n = -n;  // atrial side is +z by construction
        frame_.x_c = c;
        frame_.n = normalized(n);
        frame_.r = normalized(r - frame_.n * dot(frame_.n, r));
    }

    void solve_landmarks() {
        auto height_at = [this](double t) { return frame_.height(centerline(t)); };
        constexpr int kSamples = 8192;
        std::vector<double> h(kSamples);
        for (int i = 0; i < kSamples; ++i) h[i] = height_at(kTwoPi * i / kSamples);
        const double step = kTwoPi / kSamples;

        int i_max = 0;
        for (int i = 1; i < kSamples; ++i)
            if (h[i] > h[i_max]) i_max = i;
        theta_sh_ = wrap_angle(
            refine_extremum(height_at, (i_max - 1) * step, (i_max + 1) * step, true));
        sh_ = centerline(theta_sh_);

        struct Minimum {
            double theta, height;
        };
        std::vector<Minimum> minima;
        for (int i = 0; i < kSamples; ++i) {
            const double prev = h[(i + kSamples - 1) % kSamples];
            const double next = h[(i + 1) % kSamples];
            if (h[i] < prev && h[i] <= next) {
                const double theta =
                    refine_extremum(height_at, (i - 1) * step, (i + 1) * step, false);
                minima.push_back({wrap_angle(theta), height_at(theta)});
            }
        }
        std::sort(minima.begin(), minima.end(),
                  [](const Minimum& x, const Minimum& y) { return x.height < y.height; });
        if (minima.size() < 2)
            throw std::runtime_error("phantom: height profile yields fewer than two commissure minima");
        const Minimum first = minima.front();
        const Minimum* second = nullptr;
        for (std::size_t i = 1; i < minima.size(); ++i) {
            if (angle_separation(minima[i].theta, first.theta) >= deg_to_rad(60.0)) {
                second = &minima[i];
                break;
            }
        }
        if (!second)
            throw std::runtime_error("phantom: commissure minima closer than 60 degrees");

        // PAM: arc-length antipode of SH.
        const double total = total_length();
        auto arc_from_sh = [&](double theta) {
            return integrate([this](double t) { return speed(t); }, theta_sh_, theta,
                             1e-9 * (a_ + b_));
        };
        double lo = theta_sh_, hi = theta_sh_ + kTwoPi;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (arc_from_sh(mid) < 0.5 * total)
                lo = mid;
            else
                hi = mid;
        }
        theta_pam_ = wrap_angle(0.5 * (lo + hi));
        pam_ = centerline(theta_pam_);

        const Vec3 to_center = frame_.x_c - sh_;
        auto lc_score = [&](double theta) {
            return dot(cross(to_center, centerline(theta) - frame_.x_c), frame_.n);
        };
        double theta_a = first.theta, theta_b = second->theta;
        if (lc_score(theta_a) < lc_score(theta_b)) std::swap(theta_a, theta_b);
        theta_lc_ = theta_a;
        theta_mc_ = theta_b;
        lc_ = centerline(theta_lc_);
        mc_ = centerline(theta_mc_);
    }

    void setup_contact() {
        double hu;
        plane_uvh(mc_, uv_mc_[0], uv_mc_[1], h_mc_);
        plane_uvh(lc_, uv_lc_[0], uv_lc_[1], h_lc_);
        std::array<double, 2> uv_pam{};
        plane_uvh(pam_, uv_pam[0], uv_pam[1], hu);
        const std::array<double, 2> mid{0.5 * (uv_mc_[0] + uv_lc_[0]),
                                        0.5 * (uv_mc_[1] + uv_lc_[1])};
        const double dx = uv_pam[0] - mid[0], dy = uv_pam[1] - mid[1];
        const double len = std::hypot(dx, dy);
        if (len < 1e-9) throw std::runtime_error("phantom: PAM coincides with the commissural chord");
        d_post_ = {dx / len, dy / len};
        beta_ = p_.coaptation_offset * len;
        delta_ant_ = arc_through(theta_mc_, theta_lc_, theta_sh_);
        delta_post_ = arc_through(theta_mc_, theta_lc_, theta_pam_);
    }

    void build_centerline_tree() {
        constexpr int kSamples = 8192;
        std::vector<Vec3> pts(kSamples);
        tree_thetas_.resize(kSamples);
        for (int i = 0; i < kSamples; ++i) {
            tree_thetas_[i] = kTwoPi * i / kSamples;
            pts[i] = centerline(tree_thetas_[i]);
        }
        tree_ = std::make_unique<KdTree3>(std::move(pts));
    }
};

/// Truth orifice surface: harmonic extension of the annulus heights over the
/// projected interior, solved by finite differences (independent of the
/// pipeline's thin-plate realization).
struct HarmonicOrifice {
    double u0 = 0, v0 = 0, res = 0.25;
    int nu = 0, nv = 0;
    std::vector<double> val;
    std::vector<std::uint8_t> inside;
    double area = 0;

    double height(double u, double v) const {
        double fi = (u - u0) / res, fj = (v - v0) / res;
        fi = std::clamp(fi, 0.0, nu - 1.000001);
        fj = std::clamp(fj, 0.0, nv - 1.000001);
        const int i = static_cast<int>(fi), j = static_cast<int>(fj);
        const double a = fi - i, b = fj - j;
        auto at = [&](int ii, int jj) { return val[static_cast<std::size_t>(jj) * nu + ii]; };
        return at(i, j) * (1 - a) * (1 - b) + at(i + 1, j) * a * (1 - b) +
               at(i, j + 1) * (1 - a) * b + at(i + 1, j + 1) * a * b;
    }
};

inline HarmonicOrifice build_harmonic_orifice(const PhantomGeometry& geo, double res = 0.25) {
    constexpr int kBoundary = 2048;
    std::vector<double> pu(kBoundary), pv(kBoundary), ph(kBoundary);
    std::vector<Vec3> flat(kBoundary);
    for (int i = 0; i < kBoundary; ++i) {
        geo.plane_uvh(geo.centerline(kTwoPi * i / kBoundary), pu[i], pv[i], ph[i]);
        flat[i] = {pu[i], pv[i], 0.0};
    }
    const KdTree3 boundary_tree(flat);

    HarmonicOrifice orf;
    orf.res = res;
    const auto [pu_lo, pu_hi] = std::minmax_element(pu.begin(), pu.end());
    const auto [pv_lo, pv_hi] = std::minmax_element(pv.begin(), pv.end());
    orf.u0 = *pu_lo - 2.0 * res;
    orf.v0 = *pv_lo - 2.0 * res;
    orf.nu = static_cast<int>(std::ceil((*pu_hi + 2.0 * res - orf.u0) / res)) + 1;
    orf.nv = static_cast<int>(std::ceil((*pv_hi + 2.0 * res - orf.v0) / res)) + 1;
    const std::size_t n_nodes = static_cast<std::size_t>(orf.nu) * orf.nv;
    orf.val.resize(n_nodes);
    orf.inside.assign(n_nodes, 0);

    double h_lo = 1e300, h_hi = -1e300;
    for (int j = 0; j < orf.nv; ++j) {
        for (int i = 0; i < orf.nu; ++i) {
            const double u = orf.u0 + i * res, v = orf.v0 + j * res;
            const std::size_t k = static_cast<std::size_t>(j) * orf.nu + i;
            orf.val[k] = ph[boundary_tree.nearest({u, v, 0.0}).first];
            orf.inside[k] = point_in_polygon(u, v, pu, pv) ? 1 : 0;
            h_lo = std::min(h_lo, orf.val[k]);
            h_hi = std::max(h_hi, orf.val[k]);
        }
    }

    // SOR relaxation of the interior; boundary-adjacent values stay fixed.
    const double omega = 2.0 / (1.0 + kPi / std::max(orf.nu, orf.nv));
    const double tol = std::max(1e-12, 1e-10 * (h_hi - h_lo));
    for (int iter = 0; iter < 30000; ++iter) {
        double max_delta = 0.0;
        for (int j = 1; j + 1 < orf.nv; ++j) {
            for (int i = 1; i + 1 < orf.nu; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * orf.nu + i;
                if (!orf.inside[k]) continue;
                const double avg = 0.25 * (orf.val[k - 1] + orf.val[k + 1] + orf.val[k - orf.nu] +
                                           orf.val[k + orf.nu]);
                const double next = (1.0 - omega) * orf.val[k] + omega * avg;
                max_delta = std::max(max_delta, std::fabs(next - orf.val[k]));
                orf.val[k] = next;
            }
        }
        if (max_delta < tol) break;
    }

    // Lifted area: full interior cells directly, boundary cells on subcells.
    const ValveFrame& f = geo.frame();
    auto lifted = [&](double u, double v, double h) { return f.x_c + f.r * u + f.t() * v + f.n * h; };
    auto value_at = [&](int i, int j) { return orf.val[static_cast<std::size_t>(j) * orf.nu + i]; };
    auto inside_at = [&](int i, int j) { return orf.inside[static_cast<std::size_t>(j) * orf.nu + i] != 0; };
    double area = 0.0;
    constexpr int kSub = 8;
    for (int j = 0; j + 1 < orf.nv; ++j) {
        for (int i = 0; i + 1 < orf.nu; ++i) {
            const double u = orf.u0 + i * res, v = orf.v0 + j * res;
            const double h00 = value_at(i, j), h10 = value_at(i + 1, j);
            const double h01 = value_at(i, j + 1), h11 = value_at(i + 1, j + 1);
            auto patch = [&](double a, double b) {
                const double h = h00 * (1 - a) * (1 - b) + h10 * a * (1 - b) + h01 * (1 - a) * b +
                                 h11 * a * b;
                return lifted(u + a * res, v + b * res, h);
            };
            const int corners =
                inside_at(i, j) + inside_at(i + 1, j) + inside_at(i, j + 1) + inside_at(i + 1, j + 1);
            if (corners == 4) {
                area += triangle_area(patch(0, 0), patch(1, 0), patch(1, 1)) +
                        triangle_area(patch(0, 0), patch(1, 1), patch(0, 1));
            } else if (corners > 0) {
                for (int sj = 0; sj < kSub; ++sj) {
                    for (int si = 0; si < kSub; ++si) {
                        const double ac = (si + 0.5) / kSub, bc = (sj + 0.5) / kSub;
                        if (!point_in_polygon(u + ac * res, v + bc * res, pu, pv)) continue;
                        const double a0 = static_cast<double>(si) / kSub, a1 = (si + 1.0) / kSub;
                        const double b0 = static_cast<double>(sj) / kSub, b1 = (sj + 1.0) / kSub;
                        area += triangle_area(patch(a0, b0), patch(a1, b0), patch(a1, b1)) +
                                triangle_area(patch(a0, b0), patch(a1, b1), patch(a0, b1));
                    }
                }
            }
        }
    }
    orf.area = area;
    return orf;
}

/// Root of dot(P(t) - origin, m) along t, bracketing by scan then bisection.
template <typename F>
inline double plane_crossing(const F& point_at, const Vec3& origin, const Vec3& m, double t_lo,
                             double t_hi, int scan = 2048) {
    auto g = [&](double t) { return dot(point_at(t) - origin, m); };
    double prev_t = t_lo, prev_g = g(t_lo);
    for (int i = 1; i <= scan; ++i) {
        const double t = t_lo + (t_hi - t_lo) * i / scan;
        const double gi = g(t);
        if ((prev_g <= 0 && gi >= 0) || (prev_g >= 0 && gi <= 0)) {
            double lo = prev_t, hi = t, glo = prev_g;
            for (int k = 0; k < 80; ++k) {
                const double mid = 0.5 * (lo + hi);
                const double gm = g(mid);
                if ((glo <= 0 && gm <= 0) || (glo >= 0 && gm >= 0)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev_t = t;
        prev_g = gi;
    }
    throw std::runtime_error("phantom: no plane crossing found on the contact curve");
}

/// Geometry, truth orifice, and truth record built once and shared between
/// the measurement and voxelization entry points.
struct PhantomModel {
    PhantomGeometry geo;
    HarmonicOrifice orifice;
    AnalyticTruth truth;
};

inline PhantomModel build_phantom_model(const PhantomParams& params) {
    PhantomModel model{PhantomGeometry(params), HarmonicOrifice{}, AnalyticTruth{}};
    PhantomGeometry& geo = model.geo;
    AnalyticTruth& truth = model.truth;
    truth.params = params;
    truth.l_a = geo.total_length();
    const auto [h_lo, h_hi] = geo.height_range();
    truth.h_a = h_hi - h_lo;
    truth.center = geo.frame().x_c;
    truth.normal = geo.frame().n;
    truth.radial = geo.frame().r;
    truth.atrial_direction = geo.frame().n;

    truth.centerline.reserve(512);
    for (int i = 0; i < 512; ++i) truth.centerline.push_back(geo.centerline(kTwoPi * i / 512.0));

    model.orifice = build_harmonic_orifice(geo);
    const HarmonicOrifice& orifice = model.orifice;
    truth.annulus_area = orifice.area;

    if (geo.flat()) {
        truth.has_landmarks = false;
        truth.d_ap = params.d_ap;
        truth.d_cc = params.d_cc;
        return model;
    }

    truth.has_landmarks = true;
    truth.sh = geo.sh();
    truth.pam = geo.pam();
    truth.mc = geo.mc();
    truth.lc = geo.lc();
    truth.theta_sh = geo.theta_sh();
    truth.theta_pam = geo.theta_pam();
    truth.theta_mc = geo.theta_mc();
    truth.theta_lc = geo.theta_lc();
    truth.d_ap = distance(truth.sh, truth.pam);
    truth.d_cc = distance(truth.mc, truth.lc);

    // Prolapse amplitude so the designed bump is exact against the orifice
    // surface; for bump = 0 just record the (negative) sag maximum.
    auto anterior_excess = [&](double amp) {
        geo.set_prolapse_amplitude(amp);
        double best = -1e300;
        for (int it = 0; it <= 256; ++it) {
            for (int iw = 0; iw <= 128; ++iw) {
                const Vec3 q = geo.anterior(it / 256.0, iw / 128.0);
                double u, v, h;
                geo.plane_uvh(q, u, v, h);
                best = std::max(best, h - orifice.height(u, v));
            }
        }
        return best;
    };
    if (params.prolapse_bump > 0.0) {
        double lo = 0.0, hi = params.prolapse_bump + params.sag_anterior + 5.0;
        for (int k = 0; k < 50; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (anterior_excess(mid) < params.prolapse_bump)
                lo = mid;
            else
                hi = mid;
        }
        geo.set_prolapse_amplitude(0.5 * (lo + hi));
        truth.leaflet_height_max = anterior_excess(geo.prolapse_amplitude());
    } else {
        truth.leaflet_height_max = anterior_excess(0.0);
    }

    // The designed contact arc spans where the sheets are distinct from the
    // annulus tube; inside the tube wall the leaflets merge into the annulus.
    {
        auto outside = [&](double t) {
            return geo.centerline_distance(geo.contact(t)) >= params.tube_radius;
        };
        constexpr int kScan = 2048;
        int first = -1, last = -1;
        for (int i = 0; i <= kScan; ++i) {
            if (!outside(static_cast<double>(i) / kScan)) continue;
            if (first < 0) first = i;
            last = i;
        }
        if (first <= 0 || last >= kScan || first >= last)
            throw std::runtime_error("phantom: contact arc does not exit the annulus tube");
        auto refine = [&](double in, double out) {
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (in + out);
                (outside(mid) ? out : in) = mid;
            }
            return 0.5 * (in + out);
        };
        const double t_lo = refine((first - 1.0) / kScan, static_cast<double>(first) / kScan);
        const double t_hi = refine((last + 1.0) / kScan, static_cast<double>(last) / kScan);
        truth.coaptation_arc.reserve(256);
        for (int i = 0; i < 256; ++i)
            truth.coaptation_arc.push_back(geo.contact(t_lo + (t_hi - t_lo) * i / 255.0));
    }

    // Tips: free-edge crossing of the SH-PAM plane, one per leaflet since the
    // edges sit on opposite sides of the overlap band.
    const Vec3 m = normalized(cross(truth.pam - truth.sh, truth.normal));
    truth.anterior_tip = geo.anterior(
        detail::plane_crossing([&](double t) { return geo.anterior(t, 1.0); }, truth.sh, m, 0.0, 1.0),
        1.0);
    truth.posterior_tip = geo.posterior(
        detail::plane_crossing([&](double t) { return geo.posterior(t, 1.0); }, truth.sh, m, 0.0, 1.0),
        1.0);

    // Leaflet section lengths along the SH-PAM plane, clipped at the tube wall.
    auto section_length = [&](bool is_anterior) {
        auto point = [&](double t, double w) {
            return is_anterior ? geo.anterior(t, w) : geo.posterior(t, w);
        };
        constexpr int kSteps = 1000;
        double t_prev = -1.0;
        std::vector<Vec3> pts;
        pts.reserve(kSteps + 1);
        for (int k = 0; k <= kSteps; ++k) {
            const double w = static_cast<double>(k) / kSteps;
            auto at_w = [&](double t) { return point(t, w); };
            double t_root;
            if (t_prev < 0.0) {
                t_root = detail::plane_crossing(at_w, truth.sh, m, 0.0, 1.0);
            } else {
                double span = 0.02;
                for (;;) {
                    const double lo = std::max(0.0, t_prev - span);
                    const double hi = std::min(1.0, t_prev + span);
                    try {
                        t_root = detail::plane_crossing(at_w, truth.sh, m, lo, hi, 64);
                        break;
                    } catch (const std::runtime_error&) {
                        span *= 2.0;
                        if (span > 1.0) throw;
                    }
                }
            }
            t_prev = t_root;
            pts.push_back(point(t_root, w));
        }
        // Clip the hinge where the section leaves the annulus tube.
        std::size_t start = 0;
        while (start < pts.size() && geo.centerline_distance(pts[start]) < params.tube_radius)
            ++start;
        if (start == 0 || start >= pts.size())
            throw std::runtime_error("phantom: leaflet section does not exit the annulus tube");
        Vec3 hinge = pts[start];
        {
            // Refine the exact tube crossing between the bracketing samples.
            Vec3 lo = pts[start - 1], hi = pts[start];
            for (int k = 0; k < 40; ++k) {
                const Vec3 mid = (lo + hi) * 0.5;
                if (geo.centerline_distance(mid) < params.tube_radius)
                    lo = mid;
                else
                    hi = mid;
            }
            hinge = (lo + hi) * 0.5;
        }
        double len = distance(hinge, pts[start]);
        for (std::size_t k = start; k + 1 < pts.size(); ++k) len += distance(pts[k], pts[k + 1]);
        return len;
    };
    truth.anterior_length = section_length(true);
    truth.posterior_length = section_length(false);

    // Leaflet areas by midpoint quadrature over the patch, tube region
    // excluded; cells crossing the tube wall are resolved on subcells.
    auto patch_area = [&](bool is_anterior) {
        auto point = [&](double t, double w) {
            return is_anterior ? geo.anterior(t, w) : geo.posterior(t, w);
        };
        auto cell_inside = [&](double t, double w) {
            return geo.centerline_distance(point(t, w)) >= params.tube_radius;
        };
        auto jacobian = [&](double t, double w) {
            const double dt = 1e-6, dw = 1e-6;
            const Vec3 pt = (point(t + dt, w) - point(t - dt, w)) / (2.0 * dt);
            const Vec3 pw = (point(t, w + dw) - point(t, w - dw)) / (2.0 * dw);
            return norm(cross(pt, pw));
        };
        constexpr int kNt = 512, kNw = 256, kSub = 4;
        const double dt = 1.0 / kNt, dw = 1.0 / kNw;
        std::vector<std::uint8_t> corner(static_cast<std::size_t>(kNt + 1) * (kNw + 1));
        for (int it = 0; it <= kNt; ++it)
            for (int iw = 0; iw <= kNw; ++iw)
                corner[static_cast<std::size_t>(it) * (kNw + 1) + iw] =
                    cell_inside(it * dt, iw * dw) ? 1 : 0;
        auto corner_at = [&](int it, int iw) {
            return corner[static_cast<std::size_t>(it) * (kNw + 1) + iw] != 0;
        };
        double area = 0.0;
        for (int it = 0; it < kNt; ++it) {
            for (int iw = 0; iw < kNw; ++iw) {
                const double t0 = it * dt, w0 = iw * dw;
                const bool c00 = corner_at(it, iw), c10 = corner_at(it + 1, iw);
                const bool c01 = corner_at(it, iw + 1), c11 = corner_at(it + 1, iw + 1);
                if (c00 && c10 && c01 && c11) {
                    area += jacobian(t0 + 0.5 * dt, w0 + 0.5 * dw) * dt * dw;
                } else if (c00 || c10 || c01 || c11) {
                    for (int st = 0; st < kSub; ++st)
                        for (int sw = 0; sw < kSub; ++sw) {
                            const double tc = t0 + (st + 0.5) * dt / kSub;
                            const double wc = w0 + (sw + 0.5) * dw / kSub;
                            if (cell_inside(tc, wc))
                                area += jacobian(tc, wc) * dt * dw / (kSub * kSub);
                        }
                }
            }
        }
        return area;
    };
    truth.anterior_area = patch_area(true);
    truth.posterior_area = patch_area(false);
    return model;
}

}  // namespace detail

/// Truth record straight from the analytic geometry; voxelization-free.
inline AnalyticTruth analytic_measurements(const PhantomParams& params) {
    return detail::build_phantom_model(params).truth;
}

/// Voxelizes the phantom and returns it with its truth record. pad_dims > 0
/// pads the volume to a cube of that many voxels per side (content centered).
inline std::pair<LabeledVolume, AnalyticTruth> generate_phantom(const PhantomParams& params,
                                                                int pad_dims = 0) {
    detail::PhantomModel model = detail::build_phantom_model(params);
    if (!model.truth.has_landmarks)
        throw std::invalid_argument("generate_phantom: flat height profile cannot anchor leaflets");
    const detail::PhantomGeometry& geo = model.geo;

    const double sp = params.spacing;
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    auto grow = [&](const Vec3& q, double radius) {
        lo = {std::min(lo.x, q.x - radius), std::min(lo.y, q.y - radius), std::min(lo.z, q.z - radius)};
        hi = {std::max(hi.x, q.x + radius), std::max(hi.y, q.y + radius), std::max(hi.z, q.z + radius)};
    };
    for (int i = 0; i < 512; ++i) grow(geo.centerline(kTwoPi * i / 512.0), params.tube_radius);
    for (int it = 0; it <= 64; ++it)
        for (int iw = 0; iw <= 32; ++iw) {
            grow(geo.anterior(it / 64.0, iw / 32.0), 0.5 * params.leaflet_thickness);
            grow(geo.posterior(it / 64.0, iw / 32.0), 0.5 * params.leaflet_thickness);
        }
    lo = lo - Vec3{2.0 * sp, 2.0 * sp, 2.0 * sp};
    hi = hi + Vec3{2.0 * sp, 2.0 * sp, 2.0 * sp};

    LabeledVolume vol;
    vol.spacing = {sp, sp, sp};
    for (int a = 0; a < 3; ++a) {
        vol.dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / sp)) + 1;
        vol.origin[a] = lo[a];
    }
    if (pad_dims > 0) {
        for (int a = 0; a < 3; ++a) {
            if (vol.dims[a] > pad_dims)
                throw std::invalid_argument("generate_phantom: phantom does not fit the padded dims");
            // Shift by whole voxels so padding embeds the same sample lattice.
            vol.origin[a] -= ((pad_dims - vol.dims[a]) / 2) * sp;
            vol.dims[a] = pad_dims;
        }
    }

    const float far_away = std::numeric_limits<float>::max();
    std::vector<float> dist_tube(vol.voxel_count(), far_away);
    std::vector<float> dist_ant(vol.voxel_count(), far_away);
    std::vector<float> dist_post(vol.voxel_count(), far_away);

    auto stamp = [&](std::vector<float>& field, const Vec3& q, double reach) {
        int span[3][2];
        for (int a = 0; a < 3; ++a) {
            span[a][0] = std::max(0, static_cast<int>(std::ceil((q[a] - reach - vol.origin[a]) / sp)));
            span[a][1] = std::min(vol.dims[a] - 1,
                                  static_cast<int>(std::floor((q[a] + reach - vol.origin[a]) / sp)));
        }
        for (int k = span[2][0]; k <= span[2][1]; ++k)
            for (int j = span[1][0]; j <= span[1][1]; ++j)
                for (int i = span[0][0]; i <= span[0][1]; ++i) {
                    const float d = static_cast<float>(distance(vol.voxel_center(i, j, k), q));
                    float& cell = field[vol.index(i, j, k)];
                    if (d < cell) cell = d;
                }
    };

    // Annulus tube, skipping the designed gap.
    {
        double max_speed = 0.0;
        for (int i = 0; i < 1024; ++i) max_speed = std::max(max_speed, geo.speed(kTwoPi * i / 1024.0));
        const int n = std::max(1024, static_cast<int>(std::ceil(kTwoPi * max_speed / (0.5 * sp))));
        for (int i = 0; i < n; ++i) {
            const double theta = kTwoPi * i / n;
            if (geo.in_gap(theta)) continue;
            stamp(dist_tube, geo.centerline(theta), params.tube_radius + sp);
        }
    }
    // Leaflet shells around the middle patches.
    {
        auto stamp_patch = [&](std::vector<float>& field, bool is_anterior) {
            auto point = [&](double t, double w) {
                return is_anterior ? geo.anterior(t, w) : geo.posterior(t, w);
            };
            double max_dt = 0.0, max_dw = 0.0;
            for (int it = 0; it <= 32; ++it)
                for (int iw = 0; iw <= 16; ++iw) {
                    const double t = it / 32.0, w = iw / 16.0;
                    if (it < 32)
                        max_dt = std::max(max_dt, distance(point(t, w), point(t + 1.0 / 32, w)) * 32);
                    if (iw < 16)
                        max_dw = std::max(max_dw, distance(point(t, w), point(t, w + 1.0 / 16)) * 16);
                }
            const int nt = std::max(64, static_cast<int>(std::ceil(max_dt / (0.5 * sp))));
            const int nw = std::max(32, static_cast<int>(std::ceil(max_dw / (0.5 * sp))));
            const double reach = 0.5 * params.leaflet_thickness + sp;
            for (int it = 0; it <= nt; ++it)
                for (int iw = 0; iw <= nw; ++iw)
                    stamp(field, point(static_cast<double>(it) / nt, static_cast<double>(iw) / nw),
                          reach);
        };
        stamp_patch(dist_ant, true);
        stamp_patch(dist_post, false);
    }

    vol.labels.assign(vol.voxel_count(), 0);
    const double half_thickness = 0.5 * params.leaflet_thickness;
    for (std::size_t k = 0; k < vol.voxel_count(); ++k) {
        const double depth_tube = dist_tube[k] - params.tube_radius;
        const double depth_ant = dist_ant[k] - half_thickness;
        const double depth_post = dist_post[k] - half_thickness;
        std::uint8_t label = 0;
        double best = 0.0;
        if (depth_tube <= 0.0 && depth_tube < best) {
            label = 1;
            best = depth_tube;
        }
        if (depth_ant <= 0.0 && depth_ant < best) {
            label = 2;
            best = depth_ant;
        }
        if (depth_post <= 0.0 && depth_post < best) {
            label = 3;
            best = depth_post;
        }
        vol.labels[k] = label;
    }
    vol.validate();
    return {std::move(vol), std::move(model.truth)};
}

}  // namespace mvq
