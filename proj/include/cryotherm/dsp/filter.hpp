#pragma once

#include "cryotherm/series.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cryotherm::dsp {

/// Second-order section in transposed direct form II, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Digital Butterworth low-pass (bilinear transform, prewarped). Order must
/// be even; returns order/2 sections.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff, double sample_rate);

/// Zero-phase forward-backward filtering with odd-extension padding and
/// steady-state initial conditions. The magnitude response is |H|^2, so the
/// design cutoff becomes the -6 dB point.
void filtfilt(std::span<const Biquad> sections, std::vector<double>& x, std::size_t padlen);
void filtfilt(std::span<const Biquad> sections, std::vector<std::complex<double>>& x,
              std::size_t padlen);

/// Stages used by lowpass_decimate. Input rate = out_rate * pre_average * post_average.
struct DecimationPlan {
    std::size_t pre_average = 1;
    std::size_t post_average = 1;
    double intermediate_rate = 0.0;
};

/// Throws DataError unless cutoff <= out_rate/2 < in_rate/2 and in_rate/out_rate
/// is an integer.
DecimationPlan plan_decimation(double in_rate, double cutoff, double out_rate);

/// Order of the Butterworth prototype used by lowpass_decimate.
inline constexpr int kLowpassOrder = 8;

/// Zero-phase low-pass then averaging decimation.
///
/// Kernel: boxcar pre-average down to an intermediate rate of at least
/// max(4 out_rate, 20 cutoff), an 8th-order Butterworth applied forward and
/// backward at that rate, then block averaging to out_rate. Output samples are
/// time-stamped at the centre of their averaging block, so the chain has no
/// net delay.
TimeSeries lowpass_decimate(const TimeSeries& ts, double cutoff, double out_rate);
ComplexSeries lowpass_decimate(const ComplexSeries& ts, double cutoff, double out_rate);

/// Second half of lowpass_decimate for callers that produced the boxcar
/// pre-average themselves (the lock-in fuses it with mixing). `pre_averaged`
/// must be sampled at plan.intermediate_rate with block-centre timestamps.
ComplexSeries filter_and_average(ComplexSeries pre_averaged, const DecimationPlan& plan,
                                 double cutoff);

/// Forward-backward padding length used at a given rate and cutoff.
std::size_t default_padlen(double sample_rate, double cutoff, std::size_t n);

}  // namespace cryotherm::dsp
