#include "catch_amalgamated.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"
#include "cryotherm/lockin.hpp"
#include "cryotherm/simkit.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace cryotherm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

TimeSeries tone(double amp, double freq, double phase, double rate, double duration) {
    TimeSeries ts;
    ts.sample_rate = rate;
    ts.samples.resize(static_cast<std::size_t>(rate * duration));
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
        ts.samples[i] = amp * std::cos(2.0 * kPi * freq * ts.time_at(i) + phase);
    }
    return ts;
}

lockin::LockinConfig config(double f) {
    lockin::LockinConfig cfg;
    cfg.demod_freq = f;
    cfg.bandwidth = 1.0;
    cfg.output_rate = 100.0;
    return cfg;
}

physmodel::ResonatorParams resonator() {
    physmodel::ResonatorParams r;
    r.f0 = 669.7;
    r.q_factor = 15400;
    r.m_eff = 1.5e-12;
    return r;
}

}  // namespace

TEST_CASE("tone at the reference frequency gives its amplitude and minus its phase",
          "[lockin]") {
    const auto ts = tone(3e-3, 669.7, 0.7, 2800.0, 30.0);
    const auto z = lockin::demodulate(ts, config(669.7));
    REQUIRE(z.samples.size() > 100);
    CHECK_THAT(z.sample_rate, WithinRel(100.0, 1e-12));
    for (const auto& v : z.samples) {
        CHECK_THAT(std::abs(v), WithinRel(3e-3, 0.005));
        CHECK_THAT(std::arg(v), WithinAbs(-0.7, 1e-3));
    }
}

TEST_CASE("tone 50 Hz away is suppressed by at least 40 dB", "[lockin]") {
    const auto ts = tone(1.0, 719.7, 0.0, 2800.0, 30.0);
    const auto z = lockin::demodulate(ts, config(669.7));
    for (const auto& v : z.samples) {
        CHECK(std::abs(v) <= 1e-2);
    }
}

TEST_CASE("zero input gives a zero envelope", "[lockin]") {
    TimeSeries ts;
    ts.sample_rate = 2800.0;
    ts.samples.assign(2800 * 20, 0.0);
    const auto z = lockin::demodulate(ts, config(669.7));
    for (const auto& v : z.samples) {
        CHECK(v == std::complex<double>(0.0, 0.0));
    }
}

TEST_CASE("property: demodulation is linear", "[lockin][property]") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 10; ++trial) {
        TimeSeries ts;
        ts.sample_rate = 2000.0;
        ts.samples.resize(2000 * 12);
        for (auto& v : ts.samples) {
            v = g(rng);
        }
        const double alpha = u(rng);
        auto scaled = ts;
        for (auto& v : scaled.samples) {
            v *= alpha;
        }
        const auto a = lockin::demodulate(ts, config(400.0 + 10.0 * trial));
        const auto b = lockin::demodulate(scaled, config(400.0 + 10.0 * trial));
        REQUIRE(a.samples.size() == b.samples.size());
        double scale = 0.0;
        for (const auto& v : a.samples) {
            scale = std::max(scale, std::abs(v));
        }
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(std::abs(b.samples[i] - alpha * a.samples[i]) <= 1e-12 * std::abs(alpha) * scale);
        }
    }
}

TEST_CASE("settling discard is five filter time constants", "[lockin]") {
    const auto cfg = config(669.7);
    // Slowest analog Butterworth pole: smallest |Re s_k| over the left-half
    // plane poles s_k = wc exp(i pi (2k + 9) / 16).
    const double wc = 2.0 * kPi * 1.0;
    double slowest = wc;
    for (int k = 0; k < 8; ++k) {
        slowest = std::min(slowest, std::abs(wc * std::cos(kPi * (2.0 * k + 9.0) / 16.0)));
    }
    CHECK(lockin::settle_samples(cfg) ==
          static_cast<std::size_t>(std::ceil(5.0 / slowest * 100.0)));
}

TEST_CASE("config validation", "[lockin]") {
    auto cfg = config(669.7);
    cfg.bandwidth = 0.0;
    CHECK_THROWS_AS(lockin::validate(cfg), ConfigError);
    cfg = config(669.7);
    cfg.output_rate = 1.0;
    CHECK_THROWS_AS(lockin::validate(cfg), ConfigError);
    cfg = config(3.0);
    CHECK_THROWS_AS(lockin::validate(cfg), ConfigError);
    const auto slow = tone(1.0, 669.7, 0.0, 2000.0, 10.0);
    CHECK_THROWS_AS(lockin::demodulate(slow, config(669.7)), ConfigError);
}

TEST_CASE("noiseless tone gives a constant energy", "[lockin]") {
    const auto res = resonator();
    const double kappa = 5.26e4;
    const double a = 2e-9;  // m
    const auto ts = tone(kappa * a, res.f0, 0.3, 2800.0, 60.0);
    const auto tr = lockin::energy_trace(
        ts, config(res.f0), res, physmodel::DisplacementConversion::from_volts_per_meter(kappa));
    const double k = physmodel::stiffness(res);
    const double expect = 0.5 * k * a * a;
    for (double e : tr.energies) {
        CHECK_THAT(e, WithinRel(expect, 0.01));
    }
    CHECK(tr.floored_count == 0);
    CHECK(tr.background_power < 1e-6 * kappa * kappa * a * a);
    CHECK(tr.times.size() == tr.energies.size());
    CHECK_THAT(tr.times[1] - tr.times[0], WithinRel(0.01, 1e-9));
}

TEST_CASE("pure detection noise gives energy consistent with zero", "[lockin]") {
    const auto res = resonator();
    sim::SimConfig cfg;
    cfg.resonator = res;
    cfg.bath_temperature = 0.0;
    cfg.kappa = 5.26e4;
    cfg.detection_noise_asd = 5e-7;
    cfg.sample_rate = 2800.0;
    cfg.duration = 600.0;
    cfg.rng_seed = 21;
    const auto ts = sim::simulate_thermal_trace(cfg);
    const auto tr = lockin::energy_trace(
        ts, config(res.f0), res, physmodel::DisplacementConversion::from_volts_per_meter(cfg.kappa));
    const double mean = tr.mean_energy();
    // Background energy per sample is B k / (2 kappa^2); the mean of the
    // difference scatters by about that over sqrt(duration * bandwidth-ish) samples.
    const double scale = tr.background_energy;
    CHECK(std::abs(mean) < 5.0 * scale / std::sqrt(600.0));
    CHECK(tr.floored_count > 0);
    for (double e : tr.energies) {
        CHECK(e >= 0.0);
    }
}

TEST_CASE("background channel overlapping the passband is rejected", "[lockin]") {
    const auto res = resonator();
    const auto ts = tone(1e-4, res.f0, 0.0, 2800.0, 30.0);
    auto cfg = config(res.f0);
    cfg.background_offsets = {-1.5, 5.0};
    CHECK_THROWS_AS(lockin::energy_trace(ts, cfg, res,
                                         physmodel::DisplacementConversion::from_volts_per_meter(1.0)),
                    ConfigError);
    cfg = config(res.f0);
    CHECK_THROWS_AS(lockin::energy_trace(ts, cfg, res,
                                         physmodel::DisplacementConversion::from_volts_per_meter(0.0)),
                    ParameterError);
}

TEST_CASE("independent sample count", "[lockin]") {
    CHECK(lockin::independent_count(7200.0, 7.0) == 1028);
    CHECK(lockin::independent_count(7.0, 7.0) == 1);
    CHECK(lockin::independent_count(7200.0, 5.63) == 1278);
    CHECK_THROWS_AS(lockin::independent_count(10.0, 0.0), ParameterError);
}

TEST_CASE("energy autocorrelation time matches tau", "[lockin]") {
    sim::SimConfig cfg;
    cfg.resonator = resonator();
    cfg.resonator.q_factor = 2000;  // tau ~ 0.95 s keeps the run short
    cfg.bath_temperature = 0.01;
    cfg.kappa = 5.26e4;
    cfg.sample_rate = 2800.0;
    cfg.duration = 1500.0;
    cfg.rng_seed = 2;
    const auto ts = sim::simulate_thermal_trace(cfg);
    // A 1 Hz filter would add its own ~0.3 s memory to a 0.95 s correlation time.
    auto lk = config(cfg.resonator.f0);
    lk.bandwidth = 10.0;
    lk.background_offsets = {-25.0, 25.0};
    const auto tr = lockin::energy_trace(
        ts, lk, cfg.resonator, physmodel::DisplacementConversion::from_volts_per_meter(cfg.kappa));
    const double tau = physmodel::correlation_time(cfg.resonator);
    const double tau_int = lockin::integrated_autocorrelation_time(tr.raw_energies, tr.sample_rate);
    CHECK_THAT(tau_int, WithinRel(tau, 0.2));
}

TEST_CASE("integrated autocorrelation time of white noise is one sample", "[lockin]") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> x(100000);
    for (auto& v : x) {
        v = g(rng);
    }
    CHECK_THAT(lockin::integrated_autocorrelation_time(x, 10.0), WithinAbs(0.1, 0.01));
    const std::vector<double> flat(100, 1.0);
    CHECK_THROWS_AS(lockin::integrated_autocorrelation_time(flat, 10.0), DataError);
}
