#pragma once

#include "cryotherm/series.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <utility>

namespace cryotherm::dsp {

// ---------------------------------------------------------------------------
// Levenberg-Marquardt
// ---------------------------------------------------------------------------

struct LmOptions {
    int max_iterations = 200;
    /// Converged when |dp| <= step_tolerance * (|p| + step_tolerance).
    double step_tolerance = 1e-10;
    double initial_lambda = 1e-3;
};

struct LmResult {
    Eigen::VectorXd params;
    /// (J^T J)^-1 at the solution, not scaled by the residual variance.
    Eigen::MatrixXd covariance;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Fills the weighted residual vector r = (model - data) / sigma and its
/// Jacobian with respect to the parameters.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac)>;

/// Optional feasibility predicate; infeasible trial steps are rejected as if
/// they increased chi^2.
using FeasibleRegion = std::function<bool(const Eigen::VectorXd& p)>;

LmResult levenberg_marquardt(const ResidualFunction& fn, Eigen::VectorXd p0,
                             std::size_t n_residuals, const LmOptions& opts = {},
                             const FeasibleRegion& feasible = {});

// ---------------------------------------------------------------------------
// Straight line
// ---------------------------------------------------------------------------

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_error = 0.0;
    double intercept_error = 0.0;
    double covariance = 0.0;  // cov(slope, intercept)
    double chi2 = 0.0;
    std::size_t dof = 0;
};

enum class WeightKind {
    /// Weights are 1/sigma^2 with known sigma; errors are not rescaled.
    absolute,
    /// Weights are relative; errors are rescaled by the residual variance.
    relative,
};

/// Weighted least squares y = slope * x + intercept. Empty weights mean unit
/// weights. Throws DataError for fewer than two points or degenerate x.
LinearFit fit_linear(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights = {},
                     WeightKind kind = WeightKind::relative);

// ---------------------------------------------------------------------------
// Lorentzian line
// ---------------------------------------------------------------------------

/// S(f) = amplitude / ((f - center)^2 + (width/2)^2) + offset, with f in Hz and
/// width the full width at half maximum.
struct LorentzianFit {
    double amplitude = 0.0;
    double center = 0.0;  // Hz
    double width = 0.0;   // Hz, FWHM
    double offset = 0.0;
    double amplitude_error = 0.0;
    double center_error = 0.0;
    double width_error = 0.0;
    double offset_error = 0.0;
    double reduced_chi2 = 0.0;
    bool converged = false;

    double evaluate(double f) const;
    /// Peak height above the offset, amplitude / (width/2)^2.
    double peak_height() const;
    /// Integral of the Lorentzian term over all frequencies, 2 pi amplitude / width.
    double area() const;
};

/// Fits the Lorentzian-plus-offset model to the bins of `s` inside
/// [window.first, window.second]. Never throws on non-convergence; the result
/// carries converged = false instead. Throws DataError if the window holds
/// fewer than five bins.
LorentzianFit fit_lorentzian(const Spectrum& s, std::pair<double, double> window);

/// Same model on arbitrary (x, y) samples.
LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Gaussian histogram
// ---------------------------------------------------------------------------

struct GaussianFit {
    double mean = 0.0;
    double sigma = 0.0;
    double mean_error = 0.0;
    double sigma_error = 0.0;
    double reduced_chi2 = 0.0;
    std::size_t n_bins = 0;
    bool converged = false;
    /// False when the binned data are clearly not normal (reduced chi^2 > 3).
    bool good_fit = false;
};

/// Bins the values (default sqrt(N) bins, at least 8) and fits a normal
/// density scaled to the sample count. Throws DataError for fewer than 30
/// values or zero spread.
GaussianFit fit_gaussian_hist(std::span<const double> values, std::size_t n_bins = 0);

}  // namespace cryotherm::dsp
