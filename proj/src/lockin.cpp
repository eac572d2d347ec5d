#include "cryotherm/lockin.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/dsp/filter.hpp"
#include "cryotherm/dsp/welch.hpp"
#include "cryotherm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>

namespace cryotherm::lockin {

void validate(const LockinConfig& cfg) {
    if (!(cfg.demod_freq > 0.0)) {
        throw ConfigError("lockin: demod_freq must be positive");
    }
    if (!(cfg.bandwidth > 0.0)) {
        throw ConfigError("lockin: bandwidth must be positive");
    }
    if (!(cfg.output_rate >= 2.0 * cfg.bandwidth)) {
        throw ConfigError("lockin: output_rate must be at least 2 * bandwidth");
    }
    if (!(cfg.demod_freq + cfg.background_offsets.first > 0.0) ||
        !(cfg.demod_freq + cfg.background_offsets.second > 0.0)) {
        throw ConfigError("lockin: background channel frequencies must be positive");
    }
}

std::size_t settle_samples(const LockinConfig& cfg) {
    // Envelope decay time of the slowest pole of the 8th-order Butterworth.
    const double time_constant =
        1.0 / (constants::two_pi * cfg.bandwidth * std::sin(constants::pi / 16.0));
    return static_cast<std::size_t>(std::ceil(5.0 * time_constant * cfg.output_rate));
}

namespace {

// Mixing fused with the boxcar stage of the decimator: one pass over the
// input, no full-rate complex buffer.
ComplexSeries mix_and_preaverage(const TimeSeries& ts, double freq, std::size_t block) {
    const std::size_t n_blocks = ts.samples.size() / block;
    ComplexSeries mid;
    mid.sample_rate = ts.sample_rate / static_cast<double>(block);
    mid.start_time = ts.start_time + (static_cast<double>(block) - 1.0) / (2.0 * ts.sample_rate);
    mid.samples.resize(n_blocks);

    const double cycles_per_sample = freq / ts.sample_rate;
    const std::complex<double> step =
        std::polar(1.0, constants::two_pi * cycles_per_sample);
    // The phasor is recomputed from the absolute sample index every few
    // thousand samples so rounding does not accumulate.
    constexpr std::size_t kReanchor = 4096;
    const double start_cycles = std::fmod(freq * ts.start_time, 1.0);
    auto anchor = [&](std::size_t i) {
        const double c = start_cycles + std::fmod(cycles_per_sample * static_cast<double>(i), 1.0);
        return std::polar(1.0, constants::two_pi * c);
    };

    const double scale = 2.0 / static_cast<double>(block);
    std::complex<double> phasor = anchor(0);
    std::size_t i = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        std::complex<double> acc{};
        for (std::size_t j = 0; j < block; ++j, ++i) {
            if (i % kReanchor == 0) {
                phasor = anchor(i);
            }
            acc += ts.samples[i] * phasor;
            phasor *= step;
        }
        mid.samples[b] = acc * scale;
    }
    return mid;
}

ComplexSeries trim(ComplexSeries z, std::size_t n) {
    if (z.samples.size() <= 2 * n) {
        throw DataError("lockin: series too short for the filter settling time (" +
                        std::to_string(z.samples.size()) + " output samples, " +
                        std::to_string(2 * n) + " discarded)");
    }
    z.samples.erase(z.samples.end() - static_cast<std::ptrdiff_t>(n), z.samples.end());
    z.samples.erase(z.samples.begin(), z.samples.begin() + static_cast<std::ptrdiff_t>(n));
    z.start_time += static_cast<double>(n) / z.sample_rate;
    return z;
}

}  // namespace

std::vector<ComplexSeries> demodulate_many(const TimeSeries& ts, std::span<const double> freqs,
                                           const LockinConfig& cfg) {
    validate(cfg);
    if (!(ts.sample_rate > 0.0)) {
        throw DataError("lockin: sample rate must be positive");
    }
    for (double f : freqs) {
        if (!(f > 0.0) || !(ts.sample_rate >= 4.0 * f)) {
            throw ConfigError("lockin: sample rate must be at least 4x the reference frequency " +
                              std::to_string(f) + " Hz");
        }
    }
    const auto plan = dsp::plan_decimation(ts.sample_rate, cfg.bandwidth, cfg.output_rate);
    const std::size_t settle = settle_samples(cfg);

    std::vector<ComplexSeries> out;
    out.reserve(freqs.size());
    for (double f : freqs) {
        auto mid = mix_and_preaverage(ts, f, plan.pre_average);
        out.push_back(trim(dsp::filter_and_average(std::move(mid), plan, cfg.bandwidth), settle));
    }
    return out;
}

ComplexSeries demodulate(const TimeSeries& ts, const LockinConfig& cfg) {
    const double f = cfg.demod_freq;
    return std::move(demodulate_many(ts, std::span<const double>(&f, 1), cfg).front());
}

double EnergyTrace::mean_energy() const {
    if (raw_energies.empty()) {
        return 0.0;
    }
    return std::accumulate(raw_energies.begin(), raw_energies.end(), 0.0) /
           static_cast<double>(raw_energies.size());
}

EnergyTrace energy_trace(const TimeSeries& ts, const LockinConfig& cfg,
                         const physmodel::ResonatorParams& res,
                         const physmodel::DisplacementConversion& kappa) {
    validate(cfg);
    physmodel::validate(res);
    for (double off : {cfg.background_offsets.first, cfg.background_offsets.second}) {
        if (std::abs(off) < 2.0 * cfg.bandwidth) {
            throw ConfigError("lockin: background offset " + std::to_string(off) +
                              " Hz overlaps the signal bandwidth");
        }
    }
    const double k_vm = kappa.volts_per_meter();
    if (!(k_vm > 0.0) || !std::isfinite(k_vm)) {
        throw ParameterError("lockin: kappa must be positive and finite");
    }

    const double freqs[3] = {cfg.demod_freq, cfg.demod_freq + cfg.background_offsets.first,
                             cfg.demod_freq + cfg.background_offsets.second};
    const auto z = demodulate_many(ts, freqs, cfg);

    double background = 0.0;
    for (int c = 1; c <= 2; ++c) {
        double acc = 0.0;
        for (const auto& v : z[c].samples) {
            acc += std::norm(v);
        }
        background += 0.5 * acc / static_cast<double>(z[c].samples.size());
    }

    EnergyTrace tr;
    tr.sample_rate = cfg.output_rate;
    tr.demod_freq = cfg.demod_freq;
    tr.background_power = background;
    tr.stiffness = physmodel::stiffness(res);
    tr.resonator = res;
    tr.kappa = kappa;
    const double to_energy = tr.stiffness / (2.0 * k_vm * k_vm);
    tr.background_energy = to_energy * background;

    const auto& sig = z[0];
    const std::size_t n = sig.samples.size();
    tr.times.resize(n);
    tr.energies.resize(n);
    tr.raw_energies.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        tr.times[i] = sig.time_at(i);
        const double e = to_energy * (std::norm(sig.samples[i]) - background);
        tr.raw_energies[i] = e;
        if (e < 0.0) {
            tr.energies[i] = 0.0;
            ++tr.floored_count;
        } else {
            tr.energies[i] = e;
        }
    }
    return tr;
}

std::size_t independent_count(double duration, double tau) {
    if (!(tau > 0.0) || !(duration >= 0.0)) {
        throw ParameterError("independent_count: need tau > 0 and duration >= 0");
    }
    // Guard against 7200/7.2 landing just below an integer.
    return static_cast<std::size_t>(std::floor(duration / tau * (1.0 + 1e-12)));
}

std::size_t independent_count(const EnergyTrace& trace, double tau) {
    return independent_count(trace.duration(), tau);
}

double integrated_autocorrelation_time(std::span<const double> x, double sample_rate,
                                       double window_factor) {
    if (!(sample_rate > 0.0)) {
        throw ParameterError("integrated_autocorrelation_time: sample rate must be positive");
    }
    if (x.size() < 4) {
        throw DataError("integrated_autocorrelation_time: need at least 4 samples");
    }
    std::size_t max_lag = std::min<std::size_t>(x.size() - 1, std::max<std::size_t>(x.size() / 4, 1));
    const auto c = dsp::autocovariance(x, max_lag);
    if (!(c[0] > 0.0)) {
        throw DataError("integrated_autocorrelation_time: constant input");
    }
    double tau = 1.0;
    for (std::size_t m = 1; m < c.size(); ++m) {
        tau += 2.0 * c[m] / c[0];
        if (static_cast<double>(m) >= window_factor * tau) {
            return tau / sample_rate;
        }
    }
    return tau / sample_rate;
}

}  // namespace cryotherm::lockin
