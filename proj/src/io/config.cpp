#include "cryotherm/io/config.hpp"

#include "cryotherm/errors.hpp"

#include <array>

namespace cryotherm::io {

namespace {

std::pair<double, double> load_pair(const KeyValueReader& kv, std::string_view key,
                                    std::pair<double, double> fallback) {
    if (!kv.has(key)) {
        return fallback;
    }
    const auto v = kv.get_doubles(key);
    if (v.size() != 2) {
        throw ConfigError(kv.source() + ":" + std::to_string(kv.entries().find(key)->second.line) +
                          ": key '" + std::string(key) + "' expects two numbers");
    }
    return {v[0], v[1]};
}

std::size_t load_count(const KeyValueReader& kv, std::string_view key, std::size_t fallback) {
    return static_cast<std::size_t>(kv.get_uint(key, fallback));
}

}  // namespace

physmodel::ResonatorParams load_resonator(const KeyValueReader& kv) {
    physmodel::ResonatorParams p;
    p.f0 = kv.get_double("resonator.f0");
    p.q_factor = kv.get_double("resonator.q");
    p.m_eff = kv.get_optional_double("resonator.mass");
    p.k_spring = kv.get_optional_double("resonator.k_spring");
    p.tip_diameter = kv.get_optional_double("resonator.tip_diameter");
    p.tip_density = kv.get_optional_double("resonator.tip_density");
    p.mass_consistency_tolerance = kv.get_double("resonator.mass_tolerance", 0.25);
    try {
        physmodel::validate(p);
    } catch (const ParameterError& e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }
    return p;
}

std::optional<physmodel::CircuitParams> load_circuit(const KeyValueReader& kv) {
    static constexpr std::array<std::string_view, 11> keys = {
        "circuit.l_fi", "circuit.l_inp", "circuit.l_par1", "circuit.l_par2",
        "circuit.l_t1", "circuit.l_t2", "circuit.l_pl", "circuit.m_12",
        "circuit.squid_voltage_gain", "circuit.squid_current_coupling",
        "circuit.coupling_orientation"};
    bool any = false;
    for (auto k : keys) {
        any = any || kv.has(k);
    }
    if (!any) {
        return std::nullopt;
    }
    physmodel::CircuitParams c;
    c.l_fi = kv.get_double("circuit.l_fi", 0.0);
    c.l_inp = kv.get_double("circuit.l_inp", 0.0);
    c.l_par1 = kv.get_double("circuit.l_par1", 0.0);
    c.l_par2 = kv.get_double("circuit.l_par2", 0.0);
    c.l_t1 = kv.get_double("circuit.l_t1", 0.0);
    c.l_t2 = kv.get_double("circuit.l_t2", 0.0);
    c.l_pl = kv.get_double("circuit.l_pl", 0.0);
    c.m_12 = kv.get_double("circuit.m_12", 0.0);
    c.squid_voltage_gain = kv.get_double("circuit.squid_voltage_gain", c.squid_voltage_gain);
    c.squid_current_coupling =
        kv.get_double("circuit.squid_current_coupling", c.squid_current_coupling);
    const auto orient = kv.get_string("circuit.coupling_orientation", "current_per_flux");
    if (orient == "current_per_flux") {
        c.coupling_orientation = physmodel::CouplingOrientation::current_per_flux;
    } else if (orient == "flux_per_current") {
        c.coupling_orientation = physmodel::CouplingOrientation::flux_per_current;
    } else {
        throw ConfigError(kv.source() + ": circuit.coupling_orientation must be current_per_flux "
                                        "or flux_per_current, got '" + orient + "'");
    }
    try {
        physmodel::validate(c);
    } catch (const ParameterError& e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }
    return c;
}

sim::SimConfig load_sim(const KeyValueReader& kv) {
    sim::SimConfig cfg;
    cfg.resonator = load_resonator(kv);
    cfg.bath_temperature = kv.get_double("sim.bath_temperature");
    cfg.kappa = kv.get_double("sim.kappa");
    cfg.detection_noise_asd = kv.get_double("sim.detection_noise_asd", 0.0);
    cfg.sample_rate = kv.get_double("sim.sample_rate");
    cfg.duration = kv.get_double("sim.duration");
    cfg.rng_seed = kv.get_uint("sim.seed", 0);
    try {
        sim::validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }
    return cfg;
}

lockin::LockinConfig load_lockin(const KeyValueReader& kv, double default_freq) {
    lockin::LockinConfig cfg;
    cfg.demod_freq = kv.get_double("lockin.demod_freq", default_freq);
    cfg.bandwidth = kv.get_double("lockin.bandwidth", cfg.bandwidth);
    cfg.output_rate = kv.get_double("lockin.output_rate", cfg.output_rate);
    cfg.background_offsets = load_pair(kv, "lockin.background_offsets", cfg.background_offsets);
    try {
        lockin::validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }
    return cfg;
}

sim::SweepConfig load_sweep(const KeyValueReader& kv) {
    sim::SweepConfig cfg;
    cfg.freq_start = kv.get_double("sweep.freq_start");
    cfg.freq_stop = kv.get_double("sweep.freq_stop");
    cfg.n_points = load_count(kv, "sweep.n_points", 0);
    cfg.dwell = kv.get_double("sweep.dwell", cfg.dwell);
    cfg.crosstalk_amplitude = kv.get_double("sweep.crosstalk_amplitude", 0.0);
    cfg.crosstalk_phase = kv.get_double("sweep.crosstalk_phase", 0.0);
    cfg.drive_amplitude = kv.get_double("sweep.drive_amplitude", 0.0);
    cfg.electrostatic_amplitude = kv.get_double("sweep.electrostatic_amplitude", 0.0);
    cfg.electrostatic_phase = kv.get_double("sweep.electrostatic_phase", 0.0);
    const auto dir = kv.get_string("sweep.direction", "up");
    if (dir == "up") {
        cfg.direction = SweepDirection::up;
    } else if (dir == "down") {
        cfg.direction = SweepDirection::down;
    } else {
        throw ConfigError(kv.source() + ": sweep.direction must be up or down, got '" + dir + "'");
    }
    cfg.noise_asd = kv.get_double("sweep.noise_asd", 0.0);
    cfg.rng_seed = kv.get_uint("sweep.seed", 0);
    try {
        sim::validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }
    return cfg;
}

MfftSimPlan load_mfft_sim(const KeyValueReader& kv) {
    MfftSimPlan plan;
    auto& cfg = plan.config;
    cfg.band = load_pair(kv, "mfft.band", cfg.band);
    cfg.freq_max = kv.get_double("mfft.freq_max", cfg.freq_max);
    cfg.freq_resolution = kv.get_double("mfft.freq_resolution", cfg.freq_resolution);
    cfg.true_slope = kv.get_double("mfft.true_slope", cfg.true_slope);
    cfg.base_temperature = kv.get_double("mfft.base_temperature", cfg.base_temperature);
    cfg.noise_floor = kv.get_double("mfft.noise_floor", cfg.noise_floor);
    cfg.rolloff_freq = kv.get_double("mfft.rolloff_freq", cfg.rolloff_freq);
    cfg.rolloff_order = kv.get_double("mfft.rolloff_order", cfg.rolloff_order);
    cfg.n_averages = load_count(kv, "mfft.n_averages", cfg.n_averages);
    cfg.rng_seed = kv.get_uint("mfft.seed", 0);
    plan.temperatures = kv.get_doubles("mfft.temperatures");
    const bool any_peak =
        kv.has("mfft.peak_freqs") || kv.has("mfft.peak_heights") || kv.has("mfft.peak_widths");
    if (any_peak) {
        const auto f = kv.get_doubles("mfft.peak_freqs");
        const auto h = kv.get_doubles("mfft.peak_heights");
        const auto w = kv.has("mfft.peak_widths") ? kv.get_doubles("mfft.peak_widths")
                                                  : std::vector<double>(f.size(), 0.0);
        if (f.size() != h.size() || f.size() != w.size()) {
            throw ConfigError(kv.source() +
                              ": mfft.peak_freqs, mfft.peak_heights and mfft.peak_widths "
                              "must have the same length");
        }
        for (std::size_t i = 0; i < f.size(); ++i) {
            cfg.interference_peaks.push_back({f[i], h[i], w[i]});
        }
    }
    try {
        sim::validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }
    return plan;
}

mfft::MaskOptions load_mask_options(const KeyValueReader& kv) {
    mfft::MaskOptions o;
    o.band = load_pair(kv, "mfft.band", o.band);
    o.segment_width = kv.get_double("mask.segment_width", o.segment_width);
    o.prominence = kv.get_double("mask.prominence", o.prominence);
    o.flag_fraction = kv.get_double("mask.flag_fraction", o.flag_fraction);
    o.min_spectra = load_count(kv, "mask.min_spectra", o.min_spectra);
    o.guard_bins = load_count(kv, "mask.guard_bins", o.guard_bins);
    if (kv.has("mask.manual_ranges")) {
        const auto v = kv.get_doubles("mask.manual_ranges");
        if (v.size() % 2 != 0) {
            throw ConfigError(kv.source() + ": mask.manual_ranges needs pairs of frequencies");
        }
        for (std::size_t i = 0; i < v.size(); i += 2) {
            if (!(v[i] < v[i + 1])) {
                throw ConfigError(kv.source() + ": mask.manual_ranges entry " +
                                  std::to_string(i / 2) + " is not an increasing range");
            }
            o.manual_ranges.emplace_back(v[i], v[i + 1]);
        }
    }
    if (!(o.segment_width > 0.0) || !(o.prominence > 0.0) || !(o.flag_fraction > 0.0) ||
        o.flag_fraction > 1.0) {
        throw ConfigError(kv.source() + ": mask options out of range");
    }
    return o;
}

mfft::CalibrationOptions load_calibration_options(const KeyValueReader& kv) {
    mfft::CalibrationOptions o;
    o.band = load_pair(kv, "mfft.band", o.band);
    o.reference_range.first = kv.get_double("calibration.reference_min", o.reference_range.first);
    o.reference_range.second = kv.get_double("calibration.reference_max", o.reference_range.second);
    o.min_span_ratio = kv.get_double("calibration.min_span_ratio", o.min_span_ratio);
    const auto weighting = kv.get_string("calibration.weighting", "relative");
    if (weighting == "relative") {
        o.weighting = mfft::CalibrationWeighting::relative;
    } else if (weighting == "uniform") {
        o.weighting = mfft::CalibrationWeighting::uniform;
    } else {
        throw ConfigError(kv.source() + ": calibration.weighting must be relative or uniform");
    }
    if (!(o.reference_range.first > 0.0) || !(o.reference_range.first < o.reference_range.second)) {
        throw ConfigError(kv.source() + ": calibration reference range must be positive and increasing");
    }
    return o;
}

dispcal::AnalysisOptions load_dispcal_options(const KeyValueReader& kv) {
    dispcal::AnalysisOptions o;
    const auto anchor = kv.get_string("dispcal.anchor", "asymptotic");
    if (anchor == "asymptotic") {
        o.anchor = dispcal::AnchorMethod::asymptotic;
    } else if (anchor == "outer_median") {
        o.anchor = dispcal::AnchorMethod::outer_median;
    } else {
        throw ConfigError(kv.source() + ": dispcal.anchor must be asymptotic or outer_median, got '" +
                          anchor + "'");
    }
    o.outer_fraction = kv.get_double("dispcal.outer_fraction", o.outer_fraction);
    o.lorentzian_tolerance = kv.get_double("dispcal.lorentzian_tolerance", o.lorentzian_tolerance);
    o.detection_sigma = kv.get_double("dispcal.detection_sigma", o.detection_sigma);
    if (!(o.outer_fraction > 0.0 && o.outer_fraction < 0.5) || !(o.lorentzian_tolerance > 0.0) ||
        !(o.detection_sigma > 0.0)) {
        throw ConfigError(kv.source() + ": dispcal options out of range");
    }
    return o;
}

std::string calibration_to_text(const mfft::MfftCalibration& cal, const std::string& mask_file) {
    KeyValueWriter w;
    w.comment("MFFT calibration: band power P = slope * T + intercept");
    w.put("kind", "mfft_calibration");
    w.put("slope", cal.slope);
    w.put("slope_error", cal.slope_error);
    w.put("intercept", cal.intercept);
    w.put("intercept_error", cal.intercept_error);
    w.put("band_low_hz", cal.band.first);
    w.put("band_high_hz", cal.band.second);
    w.put("reference_min_k", cal.reference_range.first);
    w.put("reference_max_k", cal.reference_range.second);
    w.put_uint("n_points", cal.n_points);
    w.put("residual_sd", cal.residual_sd);
    w.put("r_squared", cal.r_squared);
    w.put("mask_file", mask_file);
    w.put_uint("masked_bins", cal.mask.masked_frequencies.size());
    return w.str();
}

mfft::MfftCalibration calibration_from_text(const KeyValueReader& kv, mfft::InterferenceMask mask) {
    if (kv.get_string("kind") != "mfft_calibration") {
        throw ConfigError(kv.source() + ": not an MFFT calibration file");
    }
    mfft::MfftCalibration cal;
    cal.slope = kv.get_double("slope");
    cal.slope_error = kv.get_double("slope_error");
    cal.intercept = kv.get_double("intercept");
    cal.intercept_error = kv.get_double("intercept_error");
    cal.band = {kv.get_double("band_low_hz"), kv.get_double("band_high_hz")};
    cal.reference_range = {kv.get_double("reference_min_k"), kv.get_double("reference_max_k")};
    cal.n_points = static_cast<std::size_t>(kv.get_uint("n_points", 0));
    cal.residual_sd = kv.get_double("residual_sd");
    cal.r_squared = kv.get_double("r_squared");
    kv.accept("mask_file");
    kv.accept("masked_bins");
    cal.mask = std::move(mask);
    try {
        mfft::validate(cal);
    } catch (const ParameterError& e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }
    return cal;
}

}  // namespace cryotherm::io
