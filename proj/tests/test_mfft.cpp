#include "catch_amalgamated.hpp"

#include "cryotherm/errors.hpp"
#include "cryotherm/mfft.hpp"
#include "cryotherm/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace cryotherm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Spectrum flat(double level, double df, double f_max) {
    Spectrum s;
    for (double f = 0.0; f <= f_max + 1e-9; f += df) {
        s.freqs.push_back(f);
        s.values.push_back(level);
    }
    return s;
}

sim::MfftSimConfig sim_config(std::uint64_t seed) {
    sim::MfftSimConfig cfg;
    cfg.true_slope = 2.5e-5;
    cfg.noise_floor = 1e-12;
    cfg.n_averages = 100;
    cfg.rng_seed = seed;
    cfg.interference_peaks = {{1250.0, 5e-9, 0.0}, {3000.0, 2e-9, 0.0}, {4410.0, 1e-9, 0.0}};
    return cfg;
}

std::vector<double> reference_temperatures(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = 0.02 * std::pow(50.0, static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return t;
}

}  // namespace

TEST_CASE("band power of a flat spectrum is level times bandwidth", "[mfft]") {
    const auto s = flat(3e-10, 5.0, 8000.0);
    const mfft::InterferenceMask none;
    CHECK_THAT(mfft::spectral_noise_power(s, {50.0, 6050.0}, none), WithinRel(3e-10 * 6000.0, 1e-12));
}

TEST_CASE("masked bins are dropped and the integral rescaled", "[mfft]") {
    auto s = flat(2e-10, 5.0, 8000.0);
    mfft::InterferenceMask mask;
    for (double f : {1000.0, 1005.0, 2500.0}) {
        mask.masked_frequencies.push_back(f);
        s.values[static_cast<std::size_t>(f / 5.0)] = 1e-6;
    }
    CHECK_THAT(mfft::spectral_noise_power(s, {50.0, 6050.0}, mask), WithinRel(2e-10 * 6000.0, 1e-9));
    const auto bins = mfft::mask_bins(s, mask);
    CHECK(std::count(bins.begin(), bins.end(), true) == 3);
}

TEST_CASE("band power scales linearly with the spectrum", "[mfft][property]") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int trial = 0; trial < 25; ++trial) {
        auto s = flat(1.0, 5.0, 8000.0);
        for (auto& v : s.values) {
            v = u(rng);
        }
        const double p = mfft::spectral_noise_power(s, mfft::kDefaultBand, {});
        const double a = scale(rng);
        for (auto& v : s.values) {
            v *= a;
        }
        CHECK_THAT(mfft::spectral_noise_power(s, mfft::kDefaultBand, {}), WithinRel(a * p, 1e-12));
    }
}

TEST_CASE("band outside the spectrum or mostly masked is rejected", "[mfft]") {
    const auto s = flat(1.0, 5.0, 4000.0);
    CHECK_THROWS_AS(mfft::spectral_noise_power(s, {50.0, 6050.0}, {}), DataError);
    mfft::InterferenceMask mask;
    for (double f = 100.0; f < 3000.0; f += 5.0) {
        mask.masked_frequencies.push_back(f);
    }
    CHECK_THROWS_AS(mfft::spectral_noise_power(s, {50.0, 3950.0}, mask), DataError);
}

TEST_CASE("simulated band power follows the configured slope", "[mfft]") {
    auto cfg = sim_config(1);
    cfg.interference_peaks.clear();
    const mfft::InterferenceMask none;
    const double floor_power = cfg.noise_floor * 6000.0;
    for (double t : {0.003, 0.05, 0.7}) {
        const auto s = sim::mfft_expected_spectrum(cfg, t);
        CHECK_THAT(mfft::spectral_noise_power(s, mfft::kDefaultBand, none),
                   WithinRel(cfg.true_slope * t + floor_power, 1e-9));
    }
}

TEST_CASE("interference lines are masked with few false positives", "[mfft]") {
    const auto cfg = sim_config(17);
    std::vector<double> temps(1000);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (auto& t : temps) {
        t = u(rng);
    }
    const auto spectra = sim::simulate_mfft_spectra(cfg, temps);
    const auto mask = mfft::build_mask(spectra);
    CHECK(mask.n_spectra_used == 1000);
    for (const auto& p : cfg.interference_peaks) {
        CHECK(mask.contains(p.freq, 1e-6));
    }
    std::size_t band_bins = 0, false_bins = 0;
    for (double f : spectra.front().freqs) {
        if (f < mfft::kDefaultBand.first || f > mfft::kDefaultBand.second) {
            continue;
        }
        ++band_bins;
        bool near_peak = false;
        for (const auto& p : cfg.interference_peaks) {
            near_peak = near_peak || std::abs(f - p.freq) <= 5.0 + 1e-9;  // guard bins
        }
        if (!near_peak && mask.contains(f, 1e-6)) {
            ++false_bins;
        }
    }
    CHECK(static_cast<double>(false_bins) <= 0.02 * static_cast<double>(band_bins));

    SECTION("rebuilding from the same data with the mask as prior is idempotent") {
        const auto again = mfft::build_mask(spectra, {}, &mask);
        CHECK(again.masked_frequencies == mask.masked_frequencies);
    }
}

TEST_CASE("mask requires enough spectra on a shared grid", "[mfft]") {
    const auto cfg = sim_config(4);
    const auto spectra = sim::simulate_mfft_spectra(cfg, std::vector<double>(10, 0.1));
    CHECK_THROWS_AS(mfft::build_mask(spectra), DataError);
    mfft::MaskOptions opts;
    opts.min_spectra = 2;
    auto mixed = spectra;
    mixed[3] = flat(1e-10, 10.0, 8000.0);
    CHECK_THROWS_AS(mfft::build_mask(mixed, opts), DataError);
}

TEST_CASE("calibration recovers slope and intercept", "[mfft]") {
    auto cfg = sim_config(9);
    const auto temps = reference_temperatures(40);
    const auto spectra = sim::simulate_mfft_spectra(cfg, temps);
    std::vector<std::pair<Spectrum, double>> pairs;
    for (std::size_t i = 0; i < temps.size(); ++i) {
        pairs.emplace_back(spectra[i], temps[i]);
    }
    mfft::MaskOptions mopts;
    mopts.min_spectra = 10;
    const auto mask = mfft::build_mask(spectra, mopts);
    const auto cal = mfft::calibrate(pairs, mask);
    CHECK_THAT(cal.slope, WithinRel(cfg.true_slope, 0.02));
    CHECK(std::abs(cal.slope - cfg.true_slope) <= 4.0 * cal.slope_error);
    CHECK_THAT(cal.intercept, WithinAbs(cfg.noise_floor * 6000.0, 4.0 * cal.intercept_error));
    CHECK(cal.r_squared > 0.999);
    CHECK_NOTHROW(mfft::validate(cal));

    SECTION("held-out spectra near 3 mK are recovered within two sigma") {
        auto held = cfg;
        held.rng_seed = 1234;
        const auto cold = sim::simulate_mfft_spectra(held, std::vector<double>(60, 0.0032));
        const auto est = mfft::interval_uncertainty(cold, cal);
        CHECK(est.n_spectra == 60);
        CHECK(std::abs(est.mean - 0.0032) <= est.two_sigma);
        const auto one = mfft::temperature(cold.front(), cal);
        CHECK_FALSE(one.flagged);
    }
}

TEST_CASE("noise-free calibration inverts exactly", "[mfft]") {
    auto cfg = sim_config(0);
    cfg.interference_peaks.clear();
    std::vector<std::pair<Spectrum, double>> pairs;
    for (double t : {0.02, 0.05, 0.1, 0.3, 1.0}) {
        pairs.emplace_back(sim::mfft_expected_spectrum(cfg, t), t);
    }
    const auto cal = mfft::calibrate(pairs, {});
    CHECK_THAT(cal.slope, WithinRel(cfg.true_slope, 1e-9));
    for (double t : {0.0031, 0.0034, 0.5}) {
        CHECK_THAT(mfft::temperature(sim::mfft_expected_spectrum(cfg, t), cal).value,
                   WithinRel(t, 1e-7));
    }
    // Power at or below the intercept is non-physical.
    auto empty = sim::mfft_expected_spectrum(cfg, 0.01);
    std::fill(empty.values.begin(), empty.values.end(), 0.0);
    CHECK(mfft::temperature(empty, cal).flagged);
}

TEST_CASE("calibration needs a decade of reference temperatures", "[mfft]") {
    auto cfg = sim_config(0);
    cfg.interference_peaks.clear();
    std::vector<std::pair<Spectrum, double>> pairs;
    for (double t : {0.1, 0.2, 0.5}) {
        pairs.emplace_back(sim::mfft_expected_spectrum(cfg, t), t);
    }
    CHECK_THROWS_AS(mfft::calibrate(pairs, {}), DataError);
}

TEST_CASE("interval estimate needs thirty spectra and handles zero spread", "[mfft]") {
    auto cfg = sim_config(0);
    cfg.interference_peaks.clear();
    std::vector<std::pair<Spectrum, double>> pairs;
    for (double t : {0.02, 1.0}) {
        pairs.emplace_back(sim::mfft_expected_spectrum(cfg, t), t);
    }
    const auto cal = mfft::calibrate(pairs, {});
    const std::vector<Spectrum> few(10, sim::mfft_expected_spectrum(cfg, 0.003));
    CHECK_THROWS_AS(mfft::interval_uncertainty(few, cal), DataError);
    const std::vector<Spectrum> same(30, sim::mfft_expected_spectrum(cfg, 0.003));
    const auto est = mfft::interval_uncertainty(same, cal);
    CHECK_THAT(est.mean, WithinRel(0.003, 1e-7));
    CHECK(est.two_sigma == 0.0);
}

TEST_CASE("calibration validation", "[mfft]") {
    mfft::MfftCalibration cal;
    cal.slope = -1.0;
    CHECK_THROWS_AS(mfft::validate(cal), ParameterError);
    cal.slope = 1.0;
    cal.band = {100.0, 50.0};
    CHECK_THROWS_AS(mfft::validate(cal), ParameterError);
}
