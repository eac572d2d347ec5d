#include "cryotherm/thermo.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/dsp/fit.hpp"
#include "cryotherm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cryotherm::thermo {

void validate(const EnergyHistogram& h) {
    if (h.bin_edges.size() != h.counts.size() + 1) {
        throw DataError("histogram: need counts.size() + 1 bin edges");
    }
    for (std::size_t i = 1; i < h.bin_edges.size(); ++i) {
        if (!(h.bin_edges[i] > h.bin_edges[i - 1])) {
            throw DataError("histogram: bin edges not ascending");
        }
    }
    const auto sum = std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0});
    if (sum != h.total_samples) {
        throw DataError("histogram: counts do not sum to total_samples");
    }
}

std::size_t default_bin_count(std::size_t n_samples, double lockin_rate, double tau) {
    if (!(lockin_rate > 0.0) || !(tau > 0.0)) {
        throw ParameterError("histogram: rate and tau must be positive");
    }
    const double independent = static_cast<double>(n_samples) / lockin_rate / tau;
    return std::max<std::size_t>(5, static_cast<std::size_t>(std::lround(std::sqrt(independent))));
}

EnergyHistogram make_histogram(std::span<const double> energies, double lockin_rate, double tau,
                               std::size_t n_bins) {
    if (energies.empty()) {
        throw DataError("histogram: no energies");
    }
    if (n_bins == 0) {
        n_bins = default_bin_count(energies.size(), lockin_rate, tau);
    }
    double e_max = 0.0;
    for (double e : energies) {
        if (!(e >= 0.0) || !std::isfinite(e)) {
            throw DataError("histogram: energies must be finite and non-negative");
        }
        e_max = std::max(e_max, e);
    }
    if (!(e_max > 0.0)) {
        throw DataError("histogram: all energies are zero");
    }

    EnergyHistogram h;
    h.lockin_rate = lockin_rate;
    h.tau = tau;
    h.total_samples = energies.size();
    h.bin_edges.resize(n_bins + 1);
    const double w = e_max / static_cast<double>(n_bins);
    for (std::size_t i = 0; i <= n_bins; ++i) {
        h.bin_edges[i] = w * static_cast<double>(i);
    }
    h.bin_edges[n_bins] = e_max;
    h.counts.assign(n_bins, 0);
    for (double e : energies) {
        auto idx = static_cast<std::size_t>(e / w);
        h.counts[std::min(idx, n_bins - 1)]++;
    }
    return h;
}

EnergyHistogram make_histogram(const lockin::EnergyTrace& trace, double tau, std::size_t n_bins) {
    return make_histogram(trace.energies, trace.sample_rate, tau, n_bins);
}

std::string to_string(Method m) {
    return m == Method::mean_energy ? "mean-energy" : "slope";
}

TemperatureEstimate temperature_from_mean(std::span<const double> energies, double lockin_rate,
                                          double tau) {
    if (!(lockin_rate > 0.0) || !(tau > 0.0)) {
        throw ParameterError("temperature_from_mean: rate and tau must be positive");
    }
    const double duration = static_cast<double>(energies.size()) / lockin_rate;
    if (duration < 10.0 * tau) {
        throw DataError("temperature_from_mean: trace of " + std::to_string(duration) +
                        " s is shorter than 10 tau = " + std::to_string(10.0 * tau) + " s");
    }
    const double mean =
        std::accumulate(energies.begin(), energies.end(), 0.0) / static_cast<double>(energies.size());
    TemperatureEstimate t;
    t.method = Method::mean_energy;
    t.value = mean / constants::k_boltzmann;
    t.duration = duration;
    t.tau = tau;
    t.statistical_uncertainty = std::sqrt(tau / duration) * std::abs(t.value);
    if (!(t.value > 0.0)) {
        t.flagged = true;
        t.note = "non-positive mean energy";
    }
    return t;
}

TemperatureEstimate temperature_from_mean(const lockin::EnergyTrace& trace, double tau) {
    return temperature_from_mean(trace.raw_energies, trace.sample_rate, tau);
}

std::size_t significance_threshold(double tau, double lockin_rate) {
    if (!(tau > 0.0) || !(lockin_rate > 0.0)) {
        throw ParameterError("significance_threshold: positive inputs required");
    }
    // Relative guard so that 7 s * 100 Sa/s / 10 gives 70, not 71.
    const double raw = tau / 10.0 * lockin_rate;
    return static_cast<std::size_t>(std::ceil(raw * (1.0 - 1e-12)));
}

std::vector<std::size_t> significant_bins(const EnergyHistogram& h) {
    const std::size_t threshold = significance_threshold(h.tau, h.lockin_rate);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h.counts[i] >= threshold && h.counts[i] > 0) {
            idx.push_back(i);
        }
    }
    return idx;
}

TemperatureEstimate temperature_from_slope(const EnergyHistogram& h) {
    validate(h);
    const auto idx = significant_bins(h);
    if (idx.size() < 5) {
        throw DataError("temperature_from_slope: only " + std::to_string(idx.size()) +
                        " significant bins, need 5");
    }
    std::vector<double> x, y, w;
    const double per_count = h.tau * h.lockin_rate;
    for (std::size_t i : idx) {
        const double n = static_cast<double>(h.counts[i]);
        x.push_back(h.center(i));
        y.push_back(std::log(n));
        w.push_back(n / per_count);
    }
    const auto fit = dsp::fit_linear(x, y, w, dsp::WeightKind::absolute);

    TemperatureEstimate t;
    t.method = Method::slope;
    t.tau = h.tau;
    t.duration = static_cast<double>(h.total_samples) / h.lockin_rate;
    if (!(fit.slope < 0.0)) {
        t.flagged = true;
        t.note = "non-negative Boltzmann slope";
        t.value = std::numeric_limits<double>::infinity();
        t.statistical_uncertainty = std::numeric_limits<double>::infinity();
        return t;
    }
    t.value = -1.0 / (constants::k_boltzmann * fit.slope);
    t.statistical_uncertainty = fit.slope_error / (constants::k_boltzmann * fit.slope * fit.slope);
    return t;
}

double expected_count(const EnergyHistogram& h, std::size_t i, double temperature) {
    const double kt = constants::k_boltzmann * temperature;
    const double a = h.bin_edges[i] / kt;
    const double b = h.bin_edges[i + 1] / kt;
    // exp(-a) - exp(-b) written to keep precision for narrow bins.
    return static_cast<double>(h.total_samples) * std::exp(-a) * -std::expm1(a - b);
}

BandCheck boltzmann_band_check(const EnergyHistogram& h, const TemperatureEstimate& t) {
    validate(h);
    if (!(t.value > 0.0) || !std::isfinite(t.value)) {
        throw ParameterError("boltzmann_band_check: temperature must be positive and finite");
    }
    const std::size_t threshold = significance_threshold(h.tau, h.lockin_rate);
    const double per_count = h.tau * h.lockin_rate;
    BandCheck out;
    std::size_t in2 = 0, in1 = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        BinCheck b;
        b.center = h.center(i);
        b.observed = static_cast<double>(h.counts[i]);
        b.expected = expected_count(h, i, t.value);
        b.delta_n = std::sqrt(b.observed * per_count);
        b.significant = h.counts[i] >= threshold && h.counts[i] > 0;
        if (b.significant) {
            ++out.n_significant;
            const double dev = std::abs(b.observed - b.expected);
            in2 += dev <= 2.0 * b.delta_n ? 1 : 0;
            in1 += dev <= b.delta_n ? 1 : 0;
        }
        out.bins.push_back(b);
    }
    if (out.n_significant > 0) {
        out.fraction_within_2 = static_cast<double>(in2) / static_cast<double>(out.n_significant);
        out.fraction_within_1 = static_cast<double>(in1) / static_cast<double>(out.n_significant);
    }
    return out;
}

}  // namespace cryotherm::thermo
