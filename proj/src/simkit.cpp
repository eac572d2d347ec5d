#include "cryotherm/simkit.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <random>

namespace cryotherm::sim {

using constants::k_boltzmann;
using constants::two_pi;

void validate(const SimConfig& cfg) {
    try {
        physmodel::validate(cfg.resonator);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("sim: ") + e.what());
    }
    if (!(cfg.sample_rate > 4.0 * cfg.resonator.f0)) {
        throw ConfigError("sim: sample_rate must exceed 4*f0");
    }
    if (!(cfg.duration > 0.0)) {
        throw ConfigError("sim: duration must be positive");
    }
    if (!(cfg.detection_noise_asd >= 0.0)) {
        throw ConfigError("sim: detection_noise_asd must be non-negative");
    }
    if (!(cfg.bath_temperature >= 0.0)) {
        throw ConfigError("sim: bath_temperature must be non-negative");
    }
    if (!std::isfinite(cfg.kappa)) {
        throw ConfigError("sim: kappa must be finite");
    }
}

TimeSeries simulate_thermal_trace(const SimConfig& cfg) {
    validate(cfg);
    const auto& res = cfg.resonator;
    const double k = physmodel::stiffness(res);
    const double tau = physmodel::correlation_time(res);
    const double dt = 1.0 / cfg.sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate));

    // Per-quadrature stationary variance of the envelope.
    const double quad_var = k_boltzmann * cfg.bath_temperature / k;
    const double rho = std::exp(-dt / tau);
    const double innov_sd = std::sqrt(quad_var * (1.0 - rho * rho));
    const double noise_sd = cfg.detection_noise_asd * std::sqrt(cfg.sample_rate / 2.0);
    const double cycles_per_sample = res.f0 / cfg.sample_rate;

    std::mt19937_64 rng(cfg.rng_seed);
    // Ziggurat sampler: three draws per output sample dominate the run time.
    boost::random::normal_distribution<double> normal(0.0, 1.0);

    TimeSeries ts;
    ts.sample_rate = cfg.sample_rate;
    ts.channel = "squid";
    ts.unit = "V";
    ts.samples.resize(n);

    double a_re = std::sqrt(quad_var) * normal(rng);
    double a_im = std::sqrt(quad_var) * normal(rng);
    const std::complex<double> rot = std::polar(1.0, two_pi * cycles_per_sample);
    std::complex<double> carrier{1.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 4096 == 0) {
            // Re-anchor the rotating phasor to avoid drift from repeated products.
            const double cycles = std::fmod(cycles_per_sample * static_cast<double>(i), 1.0);
            carrier = std::polar(1.0, two_pi * cycles);
        }
        const double x = a_re * carrier.real() - a_im * carrier.imag();
        const double noise = noise_sd > 0.0 ? noise_sd * normal(rng) : 0.0;
        ts.samples[i] = cfg.kappa * x + noise;

        a_re = rho * a_re + innov_sd * normal(rng);
        a_im = rho * a_im + innov_sd * normal(rng);
        carrier *= rot;
    }
    return ts;
}

void validate(const SweepConfig& cfg) {
    if (!(cfg.freq_start < cfg.freq_stop)) {
        throw ConfigError("sweep: freq_start must be below freq_stop");
    }
    if (cfg.n_points < 2) {
        throw ConfigError("sweep: need at least two points");
    }
    if (cfg.crosstalk_amplitude < 0.0 || cfg.drive_amplitude < 0.0 ||
        cfg.electrostatic_amplitude < 0.0 || cfg.noise_asd < 0.0) {
        throw ConfigError("sweep: amplitudes must be non-negative");
    }
    if (!(cfg.dwell > 0.0)) {
        throw ConfigError("sweep: dwell must be positive");
    }
}

ComplexSweep simulate_sweep(const physmodel::ResonatorParams& res, const SweepConfig& cfg) {
    physmodel::validate(res);
    validate(cfg);
    const double half_width = res.f0 / (2.0 * res.q_factor);  // gamma/2 in Hz
    const double linewidth = res.f0 / res.q_factor;
    const std::complex<double> crosstalk = std::polar(cfg.crosstalk_amplitude, cfg.crosstalk_phase);
    const std::complex<double> resonant =
        std::polar(cfg.electrostatic_amplitude, cfg.electrostatic_phase) + cfg.drive_amplitude;
    const double noise_sd = cfg.noise_asd / std::sqrt(cfg.dwell) / std::sqrt(2.0);

    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    ComplexSweep sweep;
    sweep.direction = cfg.direction;
    sweep.resonance_covered = cfg.freq_start <= res.f0 - 3.0 * linewidth &&
                              cfg.freq_stop >= res.f0 + 3.0 * linewidth;
    sweep.freqs.resize(cfg.n_points);
    sweep.values.resize(cfg.n_points);
    const double step = (cfg.freq_stop - cfg.freq_start) / static_cast<double>(cfg.n_points - 1);
    for (std::size_t j = 0; j < cfg.n_points; ++j) {
        const std::size_t i = cfg.direction == SweepDirection::up ? j : cfg.n_points - 1 - j;
        const double f = cfg.freq_start + step * static_cast<double>(i);
        const std::complex<double> lorentz =
            half_width / std::complex<double>(half_width, f - res.f0);
        std::complex<double> v = crosstalk + resonant * lorentz;
        if (noise_sd > 0.0) {
            const double re = normal(rng);
            const double im = normal(rng);
            v += noise_sd * std::complex<double>(re, im);
        }
        sweep.freqs[j] = f;
        sweep.values[j] = v;
    }
    return sweep;
}

void validate(const MfftSimConfig& cfg) {
    if (!(cfg.freq_resolution > 0.0) || !(cfg.freq_max > cfg.freq_resolution)) {
        throw ConfigError("mfft sim: invalid frequency grid");
    }
    if (!(cfg.band.first >= 0.0) || !(cfg.band.first < cfg.band.second) ||
        !(cfg.band.second <= cfg.freq_max)) {
        throw ConfigError("mfft sim: band must lie inside the generated range");
    }
    for (const auto& p : cfg.interference_peaks) {
        if (p.height < 0.0 || p.width < 0.0) {
            throw ConfigError("mfft sim: interference peak heights and widths must be >= 0");
        }
    }
    if (cfg.n_averages < 1) {
        throw ConfigError("mfft sim: n_averages must be at least 1");
    }
    if (!(cfg.rolloff_freq > 0.0) || cfg.noise_floor < 0.0) {
        throw ConfigError("mfft sim: invalid rolloff or floor");
    }
}

namespace {

std::vector<double> mfft_grid(const MfftSimConfig& cfg) {
    const auto n = static_cast<std::size_t>(std::floor(cfg.freq_max / cfg.freq_resolution + 1e-9)) + 1;
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = cfg.freq_resolution * static_cast<double>(i);
    }
    return f;
}

double rolloff_shape(const MfftSimConfig& cfg, double f) {
    return 1.0 / (1.0 + std::pow(f / cfg.rolloff_freq, cfg.rolloff_order));
}

// Trapezoidal integral of the roll-off shape over the band bins, matching the
// quadrature of the spectral-noise-power integrator.
double band_shape_integral(const MfftSimConfig& cfg, const std::vector<double>& grid) {
    double acc = 0.0;
    double prev_f = 0.0, prev_s = 0.0;
    bool first = true;
    for (double f : grid) {
        if (f < cfg.band.first - 1e-9 || f > cfg.band.second + 1e-9) {
            continue;
        }
        const double s = rolloff_shape(cfg, f);
        if (!first) {
            acc += 0.5 * (s + prev_s) * (f - prev_f);
        }
        prev_f = f;
        prev_s = s;
        first = false;
    }
    return acc;
}

}  // namespace

Spectrum mfft_expected_spectrum(const MfftSimConfig& cfg, double temperature, bool include_peaks) {
    validate(cfg);
    Spectrum s;
    s.freqs = mfft_grid(cfg);
    s.values.assign(s.freqs.size(), 0.0);
    s.unit = "Phi0^2/Hz";
    s.window = "hann";
    s.overlap_fraction = 0.5;
    s.n_averages = cfg.n_averages;

    const double thermal_scale = cfg.true_slope * temperature / band_shape_integral(cfg, s.freqs);
    for (std::size_t i = 0; i < s.freqs.size(); ++i) {
        s.values[i] = thermal_scale * rolloff_shape(cfg, s.freqs[i]) + cfg.noise_floor;
    }
    if (include_peaks) {
        for (const auto& p : cfg.interference_peaks) {
            if (p.width == 0.0) {
                const auto i = static_cast<std::size_t>(std::llround(p.freq / cfg.freq_resolution));
                if (i < s.values.size()) {
                    s.values[i] += p.height;
                }
                continue;
            }
            for (std::size_t i = 0; i < s.freqs.size(); ++i) {
                const double z = (s.freqs[i] - p.freq) / p.width;
                if (std::abs(z) < 12.0) {
                    s.values[i] += p.height * std::exp(-0.5 * z * z);
                }
            }
        }
    }
    return s;
}

std::vector<Spectrum> simulate_mfft_spectra(const MfftSimConfig& cfg,
                                            const std::vector<double>& temperatures) {
    validate(cfg);
    std::vector<Spectrum> out;
    out.reserve(temperatures.size());
    const double k = static_cast<double>(cfg.n_averages);
    for (std::size_t idx = 0; idx < temperatures.size(); ++idx) {
        if (!(temperatures[idx] > 0.0)) {
            throw ConfigError("mfft sim: temperatures must be positive");
        }
        Spectrum s = mfft_expected_spectrum(cfg, temperatures[idx]);
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed),
                          static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                          static_cast<std::uint32_t>(idx), 0x6d666674u};
        std::mt19937_64 rng(seq);
        // chi^2 with 2K dof divided by 2K is Gamma(K, 1/K).
        std::gamma_distribution<double> gamma(k, 1.0 / k);
        for (double& v : s.values) {
            v *= gamma(rng);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace cryotherm::sim
