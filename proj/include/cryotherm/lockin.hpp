#pragma once

// Digital lock-in: quadrature demodulation, zero-phase low-pass, decimation
// and off-resonance background correction.

#include "cryotherm/physmodel.hpp"
#include "cryotherm/series.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace cryotherm::lockin {

struct LockinConfig {
    double demod_freq = 0.0;    // Hz
    double bandwidth = 1.0;     // Hz, low-pass cutoff
    double output_rate = 100.0; // Sa/s
    std::pair<double, double> background_offsets{-5.0, 5.0};  // Hz
};

void validate(const LockinConfig& cfg);

/// Samples discarded at each end of the lock-in output: five envelope time
/// constants 1/(2 pi bandwidth sin(pi/16)) of the slowest low-pass pole.
std::size_t settle_samples(const LockinConfig& cfg);

/// z(t) = 2 LPF[V(t) (cos wt + i sin wt)], decimated to the output rate with
/// the settling samples removed. An input a cos(wt + phi) at the demodulation
/// frequency gives |z| = a and arg z = -phi.
ComplexSeries demodulate(const TimeSeries& ts, const LockinConfig& cfg);

/// Demodulates several reference frequencies in one pass over the input.
std::vector<ComplexSeries> demodulate_many(const TimeSeries& ts, std::span<const double> freqs,
                                           const LockinConfig& cfg);

struct EnergyTrace {
    std::vector<double> times;         // s
    std::vector<double> energies;      // J, floored at zero
    std::vector<double> raw_energies;  // J, before flooring
    double sample_rate = 0.0;          // Sa/s
    double demod_freq = 0.0;           // Hz
    double background_power = 0.0;     // V^2, mean |z|^2 of the off-resonance channels
    double background_energy = 0.0;   // J, the same expressed as energy
    std::size_t floored_count = 0;
    double stiffness = 0.0;            // N/m used for the conversion
    physmodel::ResonatorParams resonator;
    physmodel::DisplacementConversion kappa;

    double duration() const {
        return sample_rate > 0.0 ? static_cast<double>(energies.size()) / sample_rate : 0.0;
    }
    /// Mean of the unfloored energies.
    double mean_energy() const;
};

/// E(t) = k (|z(t)|^2 - B) / (2 kappa^2), where B is the mean off-resonance
/// power of the two background channels. Throws ConfigError when a background
/// channel would overlap the signal passband.
EnergyTrace energy_trace(const TimeSeries& ts, const LockinConfig& cfg,
                         const physmodel::ResonatorParams& res,
                         const physmodel::DisplacementConversion& kappa);

/// floor(duration / tau).
std::size_t independent_count(double duration, double tau);
std::size_t independent_count(const EnergyTrace& trace, double tau);

/// Integrated autocorrelation time tau_int = dt (1 + 2 sum_k rho_k), summed
/// with Sokal's self-consistent window (stop at lag M >= window_factor *
/// tau_int). For the energy of a thermal oscillator this equals the amplitude
/// correlation time 2Q/omega0 and sets the variance of the mean energy.
double integrated_autocorrelation_time(std::span<const double> x, double sample_rate,
                                       double window_factor = 5.0);

}  // namespace cryotherm::lockin
