#include "cryotherm/dsp/fit.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cryotherm::dsp {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

Eigen::MatrixXd invert_normal_matrix(const Eigen::MatrixXd& jtj) {
    const Eigen::Index n = jtj.rows();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (!lu.isInvertible()) {
        return Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    }
    return lu.inverse();
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFunction& fn, Eigen::VectorXd p0,
                             std::size_t n_residuals, const LmOptions& opts,
                             const FeasibleRegion& feasible) {
    const auto m = static_cast<Eigen::Index>(n_residuals);
    const Eigen::Index n = p0.size();
    Eigen::VectorXd r(m);
    Eigen::MatrixXd jac(m, n);
    Eigen::VectorXd r_trial(m);
    Eigen::MatrixXd jac_trial(m, n);

    LmResult res;
    res.params = std::move(p0);
    fn(res.params, r, jac);
    double chi2 = r.squaredNorm();
    double lambda = opts.initial_lambda;

    for (int it = 0; it < opts.max_iterations; ++it) {
        res.iterations = it + 1;
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;

        bool accepted = false;
        bool small_step = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index i = 0; i < n; ++i) {
                a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
            }
            const Eigen::VectorXd step = a.ldlt().solve(-grad);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd trial = res.params + step;
            small_step = step.norm() <= opts.step_tolerance * (res.params.norm() + opts.step_tolerance);
            if (feasible && !feasible(trial)) {
                lambda *= 10.0;
                continue;
            }
            fn(trial, r_trial, jac_trial);
            const double chi2_trial = r_trial.squaredNorm();
            if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
                res.params = trial;
                r.swap(r_trial);
                jac.swap(jac_trial);
                chi2 = chi2_trial;
                lambda = std::max(lambda * 0.1, 1e-15);
                accepted = true;
                break;
            }
            if (small_step) {
                break;
            }
            lambda *= 10.0;
        }
        if (small_step || !accepted) {
            // Either the step fell below tolerance or no direction lowers chi^2
            // any further: the current point is a minimum to working precision.
            res.converged = true;
            break;
        }
    }

    res.chi2 = chi2;
    res.covariance = invert_normal_matrix(jac.transpose() * jac);
    if (!all_finite(res.covariance) || !res.params.allFinite()) {
        res.converged = false;
    }
    return res;
}

// ---------------------------------------------------------------------------

LinearFit fit_linear(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights, WeightKind kind) {
    if (x.size() != y.size()) {
        throw DataError("fit_linear: x and y differ in length");
    }
    if (!weights.empty() && weights.size() != x.size()) {
        throw DataError("fit_linear: weights differ in length");
    }
    if (x.size() < 2) {
        throw DataError("fit_linear: need at least two points");
    }
    const std::size_t n = x.size();
    auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w(i);
        swx += w(i) * x[i];
        swy += w(i) * y[i];
    }
    if (!(sw > 0.0)) {
        throw DataError("fit_linear: weights sum to zero");
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xbar;
        sxx += w(i) * dx * dx;
        sxy += w(i) * dx * (y[i] - ybar);
    }
    const double xscale = std::max(std::abs(xbar), std::sqrt(sxx / sw));
    if (!(sxx > 1e-24 * sw * xscale * xscale) || !(xscale > 0.0)) {
        throw DataError("fit_linear: degenerate x values");
    }

    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = y[i] - f.slope * x[i] - f.intercept;
        f.chi2 += w(i) * d * d;
    }
    f.dof = n - 2;

    double var_slope = 1.0 / sxx;
    double var_intercept = 1.0 / sw + xbar * xbar / sxx;
    double cov = -xbar / sxx;
    if (kind == WeightKind::relative) {
        const double s2 = f.dof > 0 ? f.chi2 / static_cast<double>(f.dof)
                                    : std::numeric_limits<double>::quiet_NaN();
        var_slope *= s2;
        var_intercept *= s2;
        cov *= s2;
    }
    f.slope_error = std::sqrt(var_slope);
    f.intercept_error = std::sqrt(var_intercept);
    f.covariance = cov;
    return f;
}

// ---------------------------------------------------------------------------

double LorentzianFit::evaluate(double f) const {
    const double d = f - center;
    return amplitude / (d * d + 0.25 * width * width) + offset;
}

double LorentzianFit::peak_height() const { return amplitude / (0.25 * width * width); }

double LorentzianFit::area() const { return constants::two_pi * amplitude / width; }

namespace {

struct LorentzianGuess {
    double a, c, h, o;
};

// Initial values in normalized coordinates from the peak location, the
// background level and a half-maximum scan.
LorentzianGuess guess_lorentzian(std::span<const double> u, std::span<const double> v) {
    const std::size_t n = u.size();
    const auto peak_it = std::max_element(v.begin(), v.end());
    const auto ip = static_cast<std::size_t>(peak_it - v.begin());

    std::vector<double> sorted(v.begin(), v.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 4), sorted.end());
    const double background = sorted[n / 4];
    const double height = *peak_it - background;
    const double half = background + 0.5 * height;

    std::size_t lo = ip, hi = ip;
    while (lo > 0 && v[lo] > half) {
        --lo;
    }
    while (hi + 1 < n && v[hi] > half) {
        ++hi;
    }
    const double du = n > 1 ? (u[n - 1] - u[0]) / static_cast<double>(n - 1) : 1.0;
    const double fwhm = std::max(u[hi] - u[lo], du);
    const double h = 0.5 * fwhm;
    return {height * h * h, u[ip], h, background};
}

LorentzianFit fit_lorentzian_normalized(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 5) {
        throw DataError("fit_lorentzian: need at least five samples");
    }
    // Normalize so the solver works with O(1) numbers: x about its midpoint
    // in units of the span, y in units of its maximum magnitude.
    const double x_ref = 0.5 * (x.front() + x.back());
    const double x_scale = std::max(std::abs(x.back() - x.front()), 1e-300);
    double y_scale = 0.0;
    for (double v : y) {
        y_scale = std::max(y_scale, std::abs(v));
    }
    if (!(y_scale > 0.0)) {
        y_scale = 1.0;
    }
    std::vector<double> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = (x[i] - x_ref) / x_scale;
        v[i] = y[i] / y_scale;
    }

    const LorentzianGuess g = guess_lorentzian(u, v);
    std::vector<double> sigma(n, 1.0);

    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        const double a = p[0], c = p[1], h = p[2], o = p[3];
        for (std::size_t i = 0; i < n; ++i) {
            const double d = u[i] - c;
            const double den = d * d + h * h;
            const double inv_s = 1.0 / sigma[i];
            const auto k = static_cast<Eigen::Index>(i);
            r[k] = (a / den + o - v[i]) * inv_s;
            jac(k, 0) = inv_s / den;
            jac(k, 1) = 2.0 * a * d / (den * den) * inv_s;
            jac(k, 2) = -2.0 * a * h / (den * den) * inv_s;
            jac(k, 3) = inv_s;
        }
    };

    Eigen::VectorXd p(4);
    p << g.a, g.c, g.h, g.o;
    LmResult lm = levenberg_marquardt(residuals, p, n);

    // Second pass with relative weights: Welch bins scatter in proportion to
    // their expectation.
    if (lm.params.allFinite()) {
        const double a = lm.params[0], c = lm.params[1], h = lm.params[2], o = lm.params[3];
        double max_model = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = u[i] - c;
            sigma[i] = a / (d * d + h * h) + o;
            max_model = std::max(max_model, std::abs(sigma[i]));
        }
        const double floor = std::max(max_model, 1e-300) * 1e-6;
        bool usable = max_model > 0.0;
        for (double& s : sigma) {
            s = std::max(s, floor);
            usable = usable && std::isfinite(s);
        }
        if (usable) {
            lm = levenberg_marquardt(residuals, lm.params, n);
        } else {
            std::fill(sigma.begin(), sigma.end(), 1.0);
        }
    }

    const std::size_t dof = n > 4 ? n - 4 : 1;
    const double red_chi2 = lm.chi2 / static_cast<double>(dof);
    Eigen::MatrixXd cov = lm.covariance * red_chi2;

    LorentzianFit f;
    const double a = lm.params[0], c = lm.params[1], h = lm.params[2], o = lm.params[3];
    f.amplitude = a * y_scale * x_scale * x_scale;
    f.center = x_ref + c * x_scale;
    f.width = 2.0 * std::abs(h) * x_scale;
    f.offset = o * y_scale;
    f.amplitude_error = std::sqrt(std::abs(cov(0, 0))) * y_scale * x_scale * x_scale;
    f.center_error = std::sqrt(std::abs(cov(1, 1))) * x_scale;
    f.width_error = 2.0 * std::sqrt(std::abs(cov(2, 2))) * x_scale;
    f.offset_error = std::sqrt(std::abs(cov(3, 3))) * y_scale;
    f.reduced_chi2 = red_chi2;
    f.converged = lm.converged && a > 0.0 && h != 0.0 && cov.allFinite() &&
                  f.center >= x.front() && f.center <= x.back();
    return f;
}

}  // namespace

LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DataError("fit_lorentzian: x and y differ in length");
    }
    return fit_lorentzian_normalized(x, y);
}

LorentzianFit fit_lorentzian(const Spectrum& s, std::pair<double, double> window) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.freqs.size(); ++i) {
        if (s.freqs[i] >= window.first && s.freqs[i] <= window.second) {
            x.push_back(s.freqs[i]);
            y.push_back(s.values[i]);
        }
    }
    return fit_lorentzian_normalized(x, y);
}

// ---------------------------------------------------------------------------

GaussianFit fit_gaussian_hist(std::span<const double> values, std::size_t n_bins) {
    const std::size_t n = values.size();
    if (n < 30) {
        throw DataError("fit_gaussian_hist: need at least 30 values");
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    if (!(sd > 0.0) || !(*mx_it > *mn_it) || sd <= 1e-14 * std::max(std::abs(mean), 1e-300)) {
        throw DataError("fit_gaussian_hist: values have zero spread");
    }

    if (n_bins == 0) {
        n_bins = std::max<std::size_t>(8, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))));
    }
    // Work in standardized units.
    const double lo = (*mn_it - mean) / sd;
    const double hi = (*mx_it - mean) / sd;
    const double pad = 1e-9 * (hi - lo);
    const double edge_lo = lo - pad;
    const double width = (hi - lo + 2.0 * pad) / static_cast<double>(n_bins);
    std::vector<double> counts(n_bins, 0.0), centers(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        centers[b] = edge_lo + (static_cast<double>(b) + 0.5) * width;
    }
    for (double v : values) {
        const double z = (v - mean) / sd;
        auto b = static_cast<std::size_t>((z - edge_lo) / width);
        counts[std::min(b, n_bins - 1)] += 1.0;
    }

    const double norm = static_cast<double>(n) * width / std::sqrt(constants::two_pi);
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        const double mu = p[0], s = p[1];
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double z = (centers[b] - mu) / s;
            const double e = std::exp(-0.5 * z * z);
            const double model = norm * e / s;
            const double sig = std::sqrt(std::max(counts[b], 1.0));
            const auto k = static_cast<Eigen::Index>(b);
            r[k] = (model - counts[b]) / sig;
            jac(k, 0) = model * z / s / sig;
            jac(k, 1) = model * (z * z - 1.0) / s / sig;
        }
    };
    Eigen::VectorXd p(2);
    p << 0.0, 1.0;
    const LmResult lm = levenberg_marquardt(residuals, p, n_bins, {},
                                            [](const Eigen::VectorXd& q) { return q[1] > 0.0; });

    GaussianFit f;
    f.n_bins = n_bins;
    f.mean = mean + lm.params[0] * sd;
    f.sigma = std::abs(lm.params[1]) * sd;
    f.mean_error = std::sqrt(std::abs(lm.covariance(0, 0))) * sd;
    f.sigma_error = std::sqrt(std::abs(lm.covariance(1, 1))) * sd;
    f.reduced_chi2 = lm.chi2 / static_cast<double>(n_bins > 2 ? n_bins - 2 : 1);
    f.converged = lm.converged;
    f.good_fit = lm.converged && f.reduced_chi2 <= 3.0;
    return f;
}

}  // namespace cryotherm::dsp
