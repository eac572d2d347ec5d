#pragma once

// Loaders from "section.key = value" documents into the library's config
// structs. Every loader marks the keys it reads; callers finish with
// KeyValueReader::reject_unknown(). All values are SI.

#include "cryotherm/dispcal.hpp"
#include "cryotherm/io/keyvalue.hpp"
#include "cryotherm/lockin.hpp"
#include "cryotherm/mfft.hpp"
#include "cryotherm/physmodel.hpp"
#include "cryotherm/simkit.hpp"

#include <optional>
#include <vector>

namespace cryotherm::io {

/// resonator.f0, resonator.q, resonator.mass, resonator.k_spring,
/// resonator.tip_diameter, resonator.tip_density, resonator.mass_tolerance.
physmodel::ResonatorParams load_resonator(const KeyValueReader& kv);

/// circuit.l_fi ... circuit.m_12, circuit.squid_voltage_gain,
/// circuit.squid_current_coupling, circuit.coupling_orientation
/// (current_per_flux or flux_per_current). Returns nothing when no circuit
/// key is present.
std::optional<physmodel::CircuitParams> load_circuit(const KeyValueReader& kv);

/// Resonator keys plus sim.bath_temperature, sim.kappa,
/// sim.detection_noise_asd, sim.sample_rate, sim.duration, sim.seed.
sim::SimConfig load_sim(const KeyValueReader& kv);

/// lockin.demod_freq (defaults to the given frequency), lockin.bandwidth,
/// lockin.output_rate, lockin.background_offsets = lo, hi.
lockin::LockinConfig load_lockin(const KeyValueReader& kv, double default_freq);

/// sweep.freq_start, sweep.freq_stop, sweep.n_points, sweep.dwell,
/// sweep.crosstalk_amplitude, sweep.crosstalk_phase, sweep.drive_amplitude,
/// sweep.electrostatic_amplitude, sweep.electrostatic_phase,
/// sweep.direction (up or down), sweep.noise_asd, sweep.seed.
sim::SweepConfig load_sweep(const KeyValueReader& kv);

struct MfftSimPlan {
    sim::MfftSimConfig config;
    std::vector<double> temperatures;  // K, one spectrum each
};

/// mfft.band = lo, hi, mfft.freq_max, mfft.freq_resolution, mfft.true_slope,
/// mfft.base_temperature, mfft.noise_floor, mfft.rolloff_freq,
/// mfft.rolloff_order, mfft.n_averages, mfft.seed, mfft.temperatures,
/// mfft.peak_freqs / mfft.peak_heights / mfft.peak_widths (equal lengths).
MfftSimPlan load_mfft_sim(const KeyValueReader& kv);

/// mask.segment_width, mask.prominence, mask.flag_fraction, mask.min_spectra,
/// mask.guard_bins, mask.manual_ranges = lo1, hi1, lo2, hi2, ... plus the
/// mfft.band key shared with the simulation.
mfft::MaskOptions load_mask_options(const KeyValueReader& kv);

/// calibration.reference_min, calibration.reference_max,
/// calibration.min_span_ratio plus mfft.band.
mfft::CalibrationOptions load_calibration_options(const KeyValueReader& kv);

/// dispcal.anchor (asymptotic or outer_median), dispcal.outer_fraction,
/// dispcal.lorentzian_tolerance, dispcal.detection_sigma.
dispcal::AnalysisOptions load_dispcal_options(const KeyValueReader& kv);

/// Key-value rendering of an MFFT calibration. The mask lives in a separate
/// CSV whose name is recorded under mask_file.
std::string calibration_to_text(const mfft::MfftCalibration& cal, const std::string& mask_file);

/// Reads the calibration keys back; the caller supplies the mask. Throws
/// ConfigError for missing keys or an invalid calibration.
mfft::MfftCalibration calibration_from_text(const KeyValueReader& kv, mfft::InterferenceMask mask);

}  // namespace cryotherm::io
