#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace cryotherm {

/// Uniformly sampled real signal.
struct TimeSeries {
    double sample_rate = 0.0;  // Sa/s
    double start_time = 0.0;   // s, time of samples[0]
    std::int64_t start_epoch_ns = 0;
    std::string channel = "squid";
    std::string unit = "V";
    std::vector<double> samples;

    double duration() const {
        return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
    double time_at(std::size_t i) const {
        return start_time + static_cast<double>(i) / sample_rate;
    }
};

/// Uniformly sampled complex signal (lock-in output).
struct ComplexSeries {
    double sample_rate = 0.0;
    double start_time = 0.0;
    std::vector<std::complex<double>> samples;

    double time_at(std::size_t i) const {
        return start_time + static_cast<double>(i) / sample_rate;
    }
};

/// One-sided power spectral density on a uniform ascending frequency grid.
struct Spectrum {
    std::vector<double> freqs;   // Hz
    std::vector<double> values;  // unit^2/Hz
    std::string unit = "V^2/Hz";
    std::string window = "hann";
    double overlap_fraction = 0.5;
    std::size_t n_averages = 1;

    std::size_t size() const { return freqs.size(); }
    double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

/// Throws DataError when the grid is not strictly increasing, values are
/// negative, or the array lengths disagree.
void validate(const Spectrum& s);

enum class SweepDirection { up, down };

/// Complex response of a driven frequency sweep, one point per frequency
/// in acquisition order.
struct ComplexSweep {
    std::vector<double> freqs;  // Hz
    std::vector<std::complex<double>> values;  // V
    SweepDirection direction = SweepDirection::up;
    /// False when the simulated window did not cover the resonance.
    bool resonance_covered = true;

    std::size_t size() const { return freqs.size(); }
};

}  // namespace cryotherm
