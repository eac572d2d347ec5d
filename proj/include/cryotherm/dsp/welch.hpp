#pragma once

#include "cryotherm/series.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cryotherm::dsp {

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// One-sided Welch PSD: periodic Hann window, 50% overlap, per-segment mean
/// removal. Normalized by fs * sum(w^2) so that sum(PSD) * df reproduces the
/// signal variance. The segment length must be even and not exceed the series
/// length (throws DataError otherwise).
Spectrum welch_psd(const TimeSeries& ts, std::size_t segment_length);

/// sum(values) * df over the whole spectrum.
double integrated_power(const Spectrum& s);

/// Window-weighted variance averaged over the Welch segments. Equals
/// integrated_power(welch_psd(ts, n)) up to rounding (Parseval per segment).
double windowed_segment_variance(const TimeSeries& ts, std::size_t segment_length);

/// Biased autocovariance c_k = (1/N) sum (x_i - m)(x_{i+k} - m) for lags
/// 0..max_lag, computed with a zero-padded FFT.
std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag);

/// Biased sample variance.
double variance(std::span<const double> x);

}  // namespace cryotherm::dsp
