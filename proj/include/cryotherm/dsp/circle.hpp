#pragma once

#include "cryotherm/series.hpp"

#include <complex>
#include <span>

namespace cryotherm::dsp {

struct CircleFit {
    std::complex<double> center;
    double radius = 0.0;
    double rms_residual = 0.0;
    // Standard errors from the geometric fit, scaled by the residual variance.
    double center_re_error = 0.0;
    double center_im_error = 0.0;
    double radius_error = 0.0;
    double cov_re_im = 0.0;
    double cov_re_radius = 0.0;
    double cov_im_radius = 0.0;
    bool converged = false;
};

/// Kasa algebraic fit refined by minimizing the geometric (orthogonal)
/// distances. Throws DataError for fewer than three points or collinear input.
CircleFit fit_circle(std::span<const std::complex<double>> points);
CircleFit fit_circle(const ComplexSweep& sweep);

}  // namespace cryotherm::dsp
