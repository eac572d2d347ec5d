#include "catch_amalgamated.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"
#include "cryotherm/lockin.hpp"
#include "cryotherm/simkit.hpp"
#include "cryotherm/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace cryotherm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kB = 1.380649e-23;

// Energy samples of a thermal mode, E = |a|^2 / 2 in units where k = 1, with
// a complex Ornstein-Uhlenbeck envelope of correlation time tau.
std::vector<double> thermal_energies(double temperature, double tau, double rate, std::size_t n,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double var = kB * temperature;  // per quadrature, k = 1
    const double rho = std::exp(-1.0 / (rate * tau));
    const double innov = std::sqrt(var * (1.0 - rho * rho));
    double re = std::sqrt(var) * g(rng);
    double im = std::sqrt(var) * g(rng);
    std::vector<double> e(n);
    for (auto& v : e) {
        v = 0.5 * (re * re + im * im);
        re = rho * re + innov * g(rng);
        im = rho * im + innov * g(rng);
    }
    return e;
}

// Histogram whose counts follow the Boltzmann law exactly (up to rounding).
thermo::EnergyHistogram exact_boltzmann(double temperature, std::size_t total, std::size_t bins,
                                        double e_max, double tau, double rate) {
    thermo::EnergyHistogram h;
    h.lockin_rate = rate;
    h.tau = tau;
    const double kt = kB * temperature;
    std::size_t sum = 0;
    for (std::size_t i = 0; i <= bins; ++i) {
        h.bin_edges.push_back(e_max * static_cast<double>(i) / static_cast<double>(bins));
    }
    for (std::size_t i = 0; i < bins; ++i) {
        const double p = std::exp(-h.bin_edges[i] / kt) - std::exp(-h.bin_edges[i + 1] / kt);
        const auto c = static_cast<std::size_t>(std::llround(p * static_cast<double>(total)));
        h.counts.push_back(c);
        sum += c;
    }
    h.total_samples = sum;
    return h;
}

}  // namespace

TEST_CASE("default bin count is the square root of the independent samples", "[thermo]") {
    // 7200 s at 100 Sa/s with tau = 7 s: sqrt(1028.6) = 32.07.
    CHECK(thermo::default_bin_count(720000, 100.0, 7.0) == 32);
    CHECK(thermo::default_bin_count(100, 100.0, 7.0) == 5);
}

TEST_CASE("significance threshold is ceil(tau/10 * rate)", "[thermo]") {
    CHECK(thermo::significance_threshold(7.0, 100.0) == 70);
    CHECK(thermo::significance_threshold(7.32, 100.0) == 74);
    CHECK_THROWS_AS(thermo::significance_threshold(0.0, 100.0), ParameterError);
}

TEST_CASE("histogram counts cover every energy", "[thermo][property]") {
    std::mt19937_64 rng(11);
    std::exponential_distribution<double> ex(1.0);
    std::uniform_int_distribution<std::size_t> nb(1, 60);
    std::uniform_int_distribution<std::size_t> ns(1, 5000);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> e(ns(rng));
        for (auto& v : e) {
            v = ex(rng) * 1e-24;
        }
        const std::size_t bins = nb(rng);
        const auto h = thermo::make_histogram(e, 100.0, 1.0, bins);
        REQUIRE_NOTHROW(thermo::validate(h));
        CHECK(h.size() == bins);
        CHECK(h.bin_edges.front() == 0.0);
        CHECK(h.bin_edges.back() == *std::max_element(e.begin(), e.end()));
        // Recount independently.
        std::vector<std::size_t> counts(bins, 0);
        for (double v : e) {
            std::size_t i = 0;
            while (i + 1 < bins && v >= h.bin_edges[i + 1]) {
                ++i;
            }
            counts[i]++;
        }
        std::size_t mismatched = 0;
        for (std::size_t i = 0; i < bins; ++i) {
            mismatched += counts[i] != h.counts[i] ? 1 : 0;
        }
        // Values exactly on an interior edge may fall either way in floating point.
        CHECK(mismatched <= 2);
    }
}

TEST_CASE("histogram rejects negative or empty input", "[thermo]") {
    const std::vector<double> bad{1e-24, -1e-25};
    CHECK_THROWS_AS(thermo::make_histogram(bad, 100.0, 1.0, 5), DataError);
    const std::vector<double> none;
    CHECK_THROWS_AS(thermo::make_histogram(none, 100.0, 1.0, 5), DataError);
}

TEST_CASE("mean-energy temperature and its uncertainty", "[thermo]") {
    const std::vector<double> e(2000, 2.0 * kB * 0.01);
    const auto t = thermo::temperature_from_mean(e, 10.0, 5.0);
    CHECK_THAT(t.value, WithinRel(0.02, 1e-12));
    CHECK_THAT(t.statistical_uncertainty, WithinRel(std::sqrt(5.0 / 200.0) * 0.02, 1e-12));
    CHECK_FALSE(t.flagged);

    const std::vector<double> shortrun(400, kB * 0.01);
    CHECK_THROWS_AS(thermo::temperature_from_mean(shortrun, 10.0, 5.0), DataError);

    const std::vector<double> negative(2000, -kB * 0.001);
    CHECK(thermo::temperature_from_mean(negative, 10.0, 5.0).flagged);
}

TEST_CASE("slope of an exact Boltzmann histogram gives its temperature", "[thermo]") {
    for (double temperature : {0.5e-3, 6.1e-3, 10.3e-3, 0.2}) {
        const auto h =
            exact_boltzmann(temperature, 720000, 30, 6.0 * kB * temperature, 7.0, 100.0);
        const auto t = thermo::temperature_from_slope(h);
        CHECK_FALSE(t.flagged);
        CHECK_THAT(t.value, WithinRel(temperature, 2e-3));
    }
}

TEST_CASE("slope temperature scales with energy", "[thermo][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> scale(0.1, 50.0);
    const auto base = exact_boltzmann(0.01, 500000, 25, 5.0 * kB * 0.01, 1.0, 100.0);
    const double t0 = thermo::temperature_from_slope(base).value;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = scale(rng);
        auto h = base;
        for (auto& edge : h.bin_edges) {
            edge *= a;
        }
        CHECK_THAT(thermo::temperature_from_slope(h).value, WithinRel(a * t0, 1e-9));
    }
}

TEST_CASE("rising histogram yields a flagged slope estimate", "[thermo]") {
    auto h = exact_boltzmann(0.01, 200000, 10, 3.0 * kB * 0.01, 1.0, 100.0);
    std::reverse(h.counts.begin(), h.counts.end());
    const auto t = thermo::temperature_from_slope(h);
    CHECK(t.flagged);
}

TEST_CASE("slope fit needs five significant bins", "[thermo]") {
    auto h = exact_boltzmann(0.01, 200000, 10, 3.0 * kB * 0.01, 1.0, 100.0);
    h.tau = 1e5;  // threshold above every count
    CHECK_THROWS_AS(thermo::temperature_from_slope(h), DataError);
}

TEST_CASE("expected count integrates the Boltzmann law", "[thermo]") {
    const auto h = exact_boltzmann(0.01, 100000, 12, 4.0 * kB * 0.01, 1.0, 100.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double e = thermo::expected_count(h, i, 0.01);
        const double direct = static_cast<double>(h.total_samples) *
                              (std::exp(-h.bin_edges[i] / (kB * 0.01)) -
                               std::exp(-h.bin_edges[i + 1] / (kB * 0.01)));
        CHECK_THAT(e, WithinRel(direct, 1e-10));
        sum += e;
    }
    CHECK_THAT(sum, WithinRel(h.total_samples * (1.0 - std::exp(-4.0)), 1e-10));
}

TEST_CASE("band check passes thermal data and rejects a hotter expectation", "[thermo]") {
    const double tau = 1.0, rate = 10.0, temperature = 0.0103;
    const auto e = thermal_energies(temperature, tau, rate, 200000, 21);
    const auto h = thermo::make_histogram(e, rate, tau);
    const auto t_mean = thermo::temperature_from_mean(e, rate, tau);
    CHECK_THAT(t_mean.value, WithinAbs(temperature, 4.0 * t_mean.statistical_uncertainty));

    const auto t_slope = thermo::temperature_from_slope(h);
    CHECK_THAT(t_slope.value, WithinAbs(temperature, 4.0 * t_slope.statistical_uncertainty));

    const auto good = thermo::boltzmann_band_check(h, t_mean);
    CHECK(good.n_significant >= 5);
    CHECK(good.fraction_within_2 >= 0.9);

    auto hot = t_mean;
    hot.value *= 2.0;
    const auto bad = thermo::boltzmann_band_check(h, hot);
    CHECK(bad.fraction_within_2 < 0.5);

    // delta_n / n = 1 / sqrt(t_bin / tau)
    for (const auto& b : good.bins) {
        if (b.observed > 0.0) {
            const double t_bin = b.observed / rate;
            CHECK_THAT(b.delta_n / b.observed, WithinRel(1.0 / std::sqrt(t_bin / tau), 1e-12));
        }
    }
}

TEST_CASE("band check rejects a non-physical temperature", "[thermo]") {
    const auto h = exact_boltzmann(0.01, 100000, 12, 4.0 * kB * 0.01, 1.0, 100.0);
    thermo::TemperatureEstimate t;
    t.value = -0.01;
    CHECK_THROWS_AS(thermo::boltzmann_band_check(h, t), ParameterError);
}

TEST_CASE("short simulated run through the lock-in recovers its temperature", "[thermo][slow]") {
    sim::SimConfig cfg;
    cfg.resonator.f0 = 200.0;
    cfg.resonator.q_factor = 600.0;
    cfg.resonator.m_eff = 1.5e-12;
    cfg.bath_temperature = 0.0103;
    cfg.kappa = 5e4;
    cfg.detection_noise_asd = 1e-7;
    cfg.sample_rate = 1000.0;
    cfg.duration = 1500.0;
    cfg.rng_seed = 3;
    const auto ts = sim::simulate_thermal_trace(cfg);

    lockin::LockinConfig lk;
    lk.demod_freq = 200.0;
    // The low-pass drops the Lorentzian tails beyond the bandwidth, a bias of
    // about (2/pi) * (half linewidth / bandwidth): 1% here.
    lk.bandwidth = 10.0;
    lk.output_rate = 100.0;
    lk.background_offsets = {-40.0, 40.0};
    const auto trace = lockin::energy_trace(ts, lk, cfg.resonator,
                                            physmodel::DisplacementConversion::from_volts_per_meter(5e4));
    const double tau = physmodel::correlation_time(cfg.resonator);
    CHECK_THAT(tau, WithinRel(2.0 * 600.0 / (2.0 * constants::pi * 200.0), 1e-12));

    const auto t_mean = thermo::temperature_from_mean(trace, tau);
    CHECK_THAT(t_mean.value, WithinAbs(0.0103, 3.0 * t_mean.statistical_uncertainty));
    const auto h = thermo::make_histogram(trace, tau);
    const auto t_slope = thermo::temperature_from_slope(h);
    const double combined = std::hypot(t_mean.statistical_uncertainty, t_slope.statistical_uncertainty);
    CHECK(std::abs(t_mean.value - t_slope.value) <= 3.0 * combined);
}
