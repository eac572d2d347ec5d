#pragma once

// Flux-noise thermometer: interference masking, band-integrated noise power,
// linear calibration against a reference thermometer and per-interval
// temperature statistics.

#include "cryotherm/dsp/fit.hpp"
#include "cryotherm/series.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cryotherm::mfft {

using Band = std::pair<double, double>;

inline constexpr Band kDefaultBand{50.0, 6050.0};

struct InterferenceMask {
    std::vector<double> masked_frequencies;  // Hz, sorted, unique
    double bin_width_used = 500.0;           // Hz, background-fit segment width
    double flag_fraction_threshold = 0.015;
    std::size_t n_spectra_used = 0;

    bool empty() const { return masked_frequencies.empty(); }
    std::size_t size() const { return masked_frequencies.size(); }
    /// True when f lies within tolerance of a masked frequency.
    bool contains(double f, double tolerance) const;
};

struct MaskOptions {
    double segment_width = 500.0;  // Hz
    /// Prominence threshold on the background-normalized spectrum.
    double prominence = 1.0;
    double flag_fraction = 0.015;
    std::size_t min_spectra = 1000;
    /// Neighbouring bins masked on each side of a flagged bin.
    std::size_t guard_bins = 1;
    Band band = kDefaultBand;
    /// Frequency ranges masked by hand (broad features the peak finder misses).
    std::vector<Band> manual_ranges;
};

/// Flags interference bins. Each spectrum is cut into segments of
/// segment_width, divided by a straight-line fit of its own background and
/// searched for prominent peaks. A bin enters the mask when it is flagged in
/// at least flag_fraction of the spectra. Bins of an optional prior mask are
/// kept and are replaced by the background before peak finding, so
/// rebuilding from a mask's own training data returns the same mask.
/// All spectra must share one frequency grid. Throws DataError for fewer than
/// min_spectra spectra or mismatched grids.
InterferenceMask build_mask(std::span<const Spectrum> spectra, const MaskOptions& opts = {},
                            const InterferenceMask* prior = nullptr);

/// Boolean per bin of `s`: true where the mask applies.
std::vector<bool> mask_bins(const Spectrum& s, const InterferenceMask& mask);

/// Trapezoidal integral of the PSD over the band. Masked bins are dropped from
/// both the integral and the integration weight, and the result is scaled
/// back to the full band. Throws DataError when the band is not covered by
/// the spectrum or more than half of it is masked.
double spectral_noise_power(const Spectrum& s, Band band, const InterferenceMask& mask);

enum class CalibrationWeighting {
    /// Weights 1/P^2 from the fitted line: the band power of an averaged
    /// spectrum scatters in proportion to itself.
    relative,
    uniform,
};

struct CalibrationOptions {
    Band band = kDefaultBand;
    CalibrationWeighting weighting = CalibrationWeighting::relative;
    /// Only reference points in this range enter the fit.
    std::pair<double, double> reference_range{0.015, 1.0};  // K
    /// Required ratio between the highest and lowest reference temperature.
    double min_span_ratio = 10.0;
};

struct MfftCalibration {
    Band band = kDefaultBand;
    InterferenceMask mask;
    double slope = 0.0;      // band power per K
    double intercept = 0.0;  // band power
    double slope_error = 0.0;
    double intercept_error = 0.0;
    std::pair<double, double> reference_range{0.015, 1.0};  // K
    std::size_t n_points = 0;
    double residual_sd = 0.0;  // band power
    double r_squared = 0.0;
};

/// Throws ParameterError unless slope > 0 and the band is ordered.
void validate(const MfftCalibration& cal);

/// Least-squares line P = slope * T + intercept over the reference points in
/// range. With relative weighting the fit is repeated with weights from the
/// previous line until it settles. Errors are scaled by the residual scatter.
/// Throws DataError when the points span less than min_span_ratio.
MfftCalibration calibrate(std::span<const std::pair<Spectrum, double>> spectra_with_reference,
                          const InterferenceMask& mask, const CalibrationOptions& opts = {});

struct MfftTemperature {
    double value = 0.0;  // K
    double power = 0.0;
    /// Set when P <= intercept (non-physical temperature).
    bool flagged = false;
};

/// T = (P - intercept) / slope.
MfftTemperature temperature(const Spectrum& s, const MfftCalibration& cal);

struct IntervalEstimate {
    double mean = 0.0;       // K
    double two_sigma = 0.0;  // K
    std::size_t n_spectra = 0;
    bool good_fit = true;
    dsp::GaussianFit fit;
};

/// Per-spectrum temperatures summarized by a Gaussian histogram fit; the
/// uncertainty is twice the fitted width. Identical temperatures give a zero
/// width without fitting. Throws DataError for fewer than 30 spectra.
IntervalEstimate interval_uncertainty(std::span<const Spectrum> spectra, const MfftCalibration& cal);

}  // namespace cryotherm::mfft
