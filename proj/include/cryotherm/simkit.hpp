#pragma once

// Synthetic ground truth: thermal resonator traces, driven frequency sweeps
// and flux-noise spectra.

#include "cryotherm/physmodel.hpp"
#include "cryotherm/series.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace cryotherm::sim {

struct SimConfig {
    physmodel::ResonatorParams resonator;
    double bath_temperature = 0.0;     // K
    double kappa = 1.0;                // V/m
    double detection_noise_asd = 0.0;  // V/sqrt(Hz), one-sided
    double sample_rate = 0.0;          // Sa/s
    double duration = 0.0;             // s
    std::uint64_t rng_seed = 0;
};

/// Throws ConfigError on invariant violations.
void validate(const SimConfig& cfg);

/// V(t) = kappa * x(t) + n(t) with x(t) = Re[a(t) exp(i 2 pi f0 t)].
///
/// The complex envelope a(t) is an Ornstein-Uhlenbeck process with
/// correlation time tau = 2Q/omega0 and <|a|^2> = 2 kB T / k, advanced with
/// its exact one-step transition so there is no discretization bias. It starts
/// from the stationary distribution. n(t) is white Gaussian noise with the
/// configured one-sided ASD.
TimeSeries simulate_thermal_trace(const SimConfig& cfg);

struct SweepConfig {
    double freq_start = 0.0;  // Hz
    double freq_stop = 0.0;   // Hz
    std::size_t n_points = 0;
    double dwell = 1.0;                    // s per point
    double crosstalk_amplitude = 0.0;      // V
    double crosstalk_phase = 0.0;          // rad
    double drive_amplitude = 0.0;          // V, circle diameter from magnetic drive
    double electrostatic_amplitude = 0.0;  // V
    double electrostatic_phase = 0.0;      // rad
    SweepDirection direction = SweepDirection::up;
    double noise_asd = 0.0;  // V/sqrt(Hz); per-point complex variance noise_asd^2 / dwell
    std::uint64_t rng_seed = 0;
};

void validate(const SweepConfig& cfg);

/// Complex response V = Vct e^{i phi_ct} + (V_el e^{i phi_el} + V_drive) L(omega)
/// with L = (gamma/2) / (gamma/2 + i (omega - omega0)), gamma = omega0 / Q.
/// Points are listed in acquisition order (descending for down sweeps).
ComplexSweep simulate_sweep(const physmodel::ResonatorParams& res, const SweepConfig& cfg);

struct InterferencePeak {
    double freq = 0.0;    // Hz
    double height = 0.0;  // flux^2/Hz at the peak
    double width = 0.0;   // Hz, Gaussian sigma; 0 puts all power in one bin
};

struct MfftSimConfig {
    std::pair<double, double> band{50.0, 6050.0};  // Hz
    double freq_max = 8000.0;                     // Hz, top of the generated grid
    double freq_resolution = 5.0;                 // Hz
    /// Slope of the band-integrated thermal noise power, flux^2 per K.
    double true_slope = 1.0;
    double base_temperature = 0.01;  // K, reference for peak-dominance checks
    double noise_floor = 0.0;        // flux^2/Hz, temperature independent
    double rolloff_freq = 2000.0;    // Hz
    double rolloff_order = 2.0;
    std::vector<InterferencePeak> interference_peaks;
    std::size_t n_averages = 100;
    std::uint64_t rng_seed = 0;
};

void validate(const MfftSimConfig& cfg);

/// Noise-free expectation S(f) at temperature T on the configured grid.
Spectrum mfft_expected_spectrum(const MfftSimConfig& cfg, double temperature,
                                bool include_peaks = true);

/// One spectrum per temperature; each bin is S(f) times a chi-square variate
/// with 2 n_averages degrees of freedom divided by its mean. Spectrum i uses a
/// stream derived from (rng_seed, i).
std::vector<Spectrum> simulate_mfft_spectra(const MfftSimConfig& cfg,
                                            const std::vector<double>& temperatures);

}  // namespace cryotherm::sim
