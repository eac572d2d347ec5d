#include "cryotherm/dsp/circle.hpp"

#include "cryotherm/dsp/fit.hpp"
#include "cryotherm/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace cryotherm::dsp {

CircleFit fit_circle(std::span<const std::complex<double>> points) {
    const std::size_t n = points.size();
    if (n < 3) {
        throw DataError("fit_circle: need at least three points");
    }

    // Centre on the centroid and scale to unit rms spread.
    std::complex<double> centroid{};
    for (const auto& p : points) {
        centroid += p;
    }
    centroid /= static_cast<double>(n);
    double spread = 0.0;
    for (const auto& p : points) {
        spread += std::norm(p - centroid);
    }
    spread = std::sqrt(spread / static_cast<double>(n));
    if (!(spread > 0.0)) {
        throw DataError("fit_circle: all points coincide");
    }
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto q = (points[i] - centroid) / spread;
        xs[i] = q.real();
        ys[i] = q.imag();
    }

    // Kasa: minimize sum (x^2 + y^2 + D x + E y + F)^2.
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d row(xs[i], ys[i], 1.0);
        ata += row * row.transpose();
        atb -= row * (xs[i] * xs[i] + ys[i] * ys[i]);
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(ata);
    const double cond = svd.singularValues()(0) / svd.singularValues()(2);
    if (!std::isfinite(cond) || cond > 1e12) {
        throw DataError("fit_circle: points are collinear");
    }
    const Eigen::Vector3d def = ata.ldlt().solve(atb);
    double cx = -0.5 * def[0];
    double cy = -0.5 * def[1];
    const double r2 = cx * cx + cy * cy - def[2];
    if (!(r2 > 0.0)) {
        throw DataError("fit_circle: algebraic fit produced no real circle");
    }
    double r = std::sqrt(r2);
    if (r > 1e6) {
        throw DataError("fit_circle: points are collinear");
    }

    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& res, Eigen::MatrixXd& jac) {
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = xs[i] - p[0];
            const double dy = ys[i] - p[1];
            const double d = std::hypot(dx, dy);
            const auto k = static_cast<Eigen::Index>(i);
            res[k] = d - p[2];
            if (d > 0.0) {
                jac(k, 0) = -dx / d;
                jac(k, 1) = -dy / d;
            } else {
                jac(k, 0) = 0.0;
                jac(k, 1) = 0.0;
            }
            jac(k, 2) = -1.0;
        }
    };
    Eigen::VectorXd p0(3);
    p0 << cx, cy, r;
    const LmResult lm = levenberg_marquardt(residuals, p0, n);
    cx = lm.params[0];
    cy = lm.params[1];
    r = std::abs(lm.params[2]);

    CircleFit fit;
    fit.center = centroid + spread * std::complex<double>(cx, cy);
    fit.radius = r * spread;
    fit.rms_residual = std::sqrt(lm.chi2 / static_cast<double>(n)) * spread;
    fit.converged = lm.converged;
    if (n > 3 && lm.covariance.allFinite()) {
        const double s2 = lm.chi2 / static_cast<double>(n - 3) * spread * spread;
        const Eigen::MatrixXd cov = lm.covariance * s2;
        fit.center_re_error = std::sqrt(std::abs(cov(0, 0)));
        fit.center_im_error = std::sqrt(std::abs(cov(1, 1)));
        fit.radius_error = std::sqrt(std::abs(cov(2, 2)));
        fit.cov_re_im = cov(0, 1);
        fit.cov_re_radius = cov(0, 2);
        fit.cov_im_radius = cov(1, 2);
    }
    return fit;
}

CircleFit fit_circle(const ComplexSweep& sweep) { return fit_circle(sweep.values); }

}  // namespace cryotherm::dsp
