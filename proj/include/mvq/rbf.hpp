#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mvq {

enum class RbfKernel {
    kPolyharmonic5,  // phi(rho) = rho^5
    kThinPlate,      // phi(rho) = rho^2 log(rho)
};

/// Scattered-data interpolant h(u, v) = sum w_i phi(|x - x_i|) + p(u, v),
/// optionally ridge-regularized (lambda added to the kernel diagonal). The
/// drift p matches the kernel's conditional positive definiteness order:
/// affine for the thin-plate kernel, full quadratic for rho^5 (an affine
/// drift leaves rho^5 indefinite and the fit oscillates wildly).
class RbfSurface {
public:
    RbfSurface() = default;

    RbfSurface(std::vector<double> u, std::vector<double> v, std::vector<double> h,
               RbfKernel kernel, double lambda)
        : u_(std::move(u)), v_(std::move(v)), values_(std::move(h)), kernel_(kernel) {
        const std::size_t n = u_.size();
        const std::size_t q = drift_terms();
        if (v_.size() != n || values_.size() != n)
            throw std::invalid_argument("RbfSurface: coordinate/value size mismatch");
        if (n < q) throw std::invalid_argument("RbfSurface: fewer data points than drift terms");
        if (lambda < 0) throw std::invalid_argument("RbfSurface: negative regularization");

        if (lambda == 0.0) check_duplicates();
        check_collinear();

        const std::size_t m = u_.size();  // may shrink after duplicate dedup
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + q, m + q);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(m + q);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const double k = basis(dist(i, j));
                a(i, j) = k;
                a(j, i) = k;
            }
            a(i, i) = lambda;
            const auto p = drift_row(u_[i], v_[i]);
            for (std::size_t d = 0; d < q; ++d) a(i, m + d) = a(m + d, i) = p[d];
            b(i) = values_[i];
        }
        // Polyharmonic entries grow like rho^5, so the residual is judged by
        // the normwise backward error, not against |b| alone.
        const Eigen::VectorXd x = a.partialPivLu().solve(b);
        const double scale = a.lpNorm<Eigen::Infinity>() * x.lpNorm<Eigen::Infinity>() +
                             b.lpNorm<Eigen::Infinity>();
        if (!x.allFinite() ||
            (a * x - b).lpNorm<Eigen::Infinity>() > 1e-10 * std::max(1.0, scale))
            throw std::runtime_error("RbfSurface: rank-deficient interpolation system");
        weights_.assign(x.data(), x.data() + m);
        coeffs_.fill(0.0);
        for (std::size_t d = 0; d < q; ++d) coeffs_[d] = x(m + d);
    }

    double operator()(double u, double v) const {
        const auto p = drift_row(u, v);
        double sum = 0.0;
        for (std::size_t d = 0; d < drift_terms(); ++d) sum += coeffs_[d] * p[d];
        for (std::size_t i = 0; i < weights_.size(); ++i)
            sum += weights_[i] * basis(std::hypot(u - u_[i], v - v_[i]));
        return sum;
    }

    std::size_t center_count() const { return weights_.size(); }

private:
    std::vector<double> u_, v_, values_;
    std::vector<double> weights_;
    std::array<double, 6> coeffs_{};
    RbfKernel kernel_ = RbfKernel::kPolyharmonic5;

    std::size_t drift_terms() const { return kernel_ == RbfKernel::kPolyharmonic5 ? 6 : 3; }

    std::array<double, 6> drift_row(double u, double v) const {
        return {1.0, u, v, u * u, u * v, v * v};
    }

    double basis(double rho) const {
        if (kernel_ == RbfKernel::kPolyharmonic5) {
            // CPD-positive orientation of the quintic: with +rho^5 the ridge
            // sits on a negative-definite block and the solve is indefinite.
            const double r2 = rho * rho;
            return -r2 * r2 * rho;
        }
        return (rho > 0.0) ? rho * rho * std::log(rho) : 0.0;
    }

    double dist(std::size_t i, std::size_t j) const {
        return std::hypot(u_[i] - u_[j], v_[i] - v_[j]);
    }

    /// Collinear sites leave the linear drift term underdetermined and the
    /// bordered system exactly singular, regardless of regularization.
    void check_collinear() const {
        const std::size_t n = u_.size();
        double mu = 0, mv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mu += u_[i];
            mv += v_[i];
        }
        mu /= static_cast<double>(n);
        mv /= static_cast<double>(n);
        double suu = 0, suv = 0, svv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            suu += (u_[i] - mu) * (u_[i] - mu);
            suv += (u_[i] - mu) * (v_[i] - mv);
            svv += (v_[i] - mv) * (v_[i] - mv);
        }
        const double trace = suu + svv;
        const double det = suu * svv - suv * suv;
        // Smallest covariance eigenvalue relative to the largest; zero means
        // every site lies on one line.
        const double disc = std::sqrt(std::max(0.0, trace * trace - 4.0 * det));
        const double eig_min = 0.5 * (trace - disc);
        const double eig_max = 0.5 * (trace + disc);
        if (eig_min <= 1e-14 * std::max(1e-300, eig_max))
            throw std::runtime_error("RbfSurface: rank-deficient, collinear sites");
    }

    /// With no regularization, coincident (u,v) sites make the system singular:
    /// conflicting heights are an error, repeated identical samples are dropped.
    void check_duplicates() {
        const std::size_t n = u_.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (u_[a] != u_[b]) return u_[a] < u_[b];
            return v_[a] < v_[b];
        });
        std::vector<bool> drop(n, false);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const std::size_t a = order[k], b = order[k + 1];
            if (std::fabs(u_[a] - u_[b]) < 1e-12 && std::fabs(v_[a] - v_[b]) < 1e-12) {
                if (std::fabs(values_[a] - values_[b]) > 1e-12)
                    throw std::runtime_error(
                        "RbfSurface: rank-deficient, duplicate sites with conflicting heights");
                drop[b] = true;
            }
        }
        if (std::none_of(drop.begin(), drop.end(), [](bool d) { return d; })) return;
        std::vector<double> nu, nv, nh;
        for (std::size_t i = 0; i < n; ++i) {
            if (drop[i]) continue;
            nu.push_back(u_[i]);
            nv.push_back(v_[i]);
            nh.push_back(values_[i]);
        }
        u_ = std::move(nu);
        v_ = std::move(nv);
        values_ = std::move(nh);
        if (u_.size() < 3) throw std::invalid_argument("RbfSurface: fewer than 3 distinct data points");
    }
};

}  // namespace mvq
