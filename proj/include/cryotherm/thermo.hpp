#pragma once

// Cantilever thermometry from an energy trace: mean-energy temperature,
// Boltzmann histogram, slope temperature and the statistical band check.

#include "cryotherm/lockin.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cryotherm::thermo {

struct EnergyHistogram {
    std::vector<double> bin_edges;    // J, ascending, size = counts.size() + 1
    std::vector<std::size_t> counts;
    std::size_t total_samples = 0;
    double lockin_rate = 0.0;         // Sa/s
    double tau = 0.0;                 // s

    std::size_t size() const { return counts.size(); }
    double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
    double width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }
};

/// Throws DataError when counts do not sum to total_samples or the edges are
/// not ascending.
void validate(const EnergyHistogram& h);

/// Default bin count: round(sqrt(duration / tau)), i.e. the square root of the
/// number of independent samples, at least 5.
std::size_t default_bin_count(std::size_t n_samples, double lockin_rate, double tau);

/// Equal-width bins over [0, max energy]. n_bins = 0 selects default_bin_count.
EnergyHistogram make_histogram(std::span<const double> energies, double lockin_rate, double tau,
                               std::size_t n_bins = 0);
EnergyHistogram make_histogram(const lockin::EnergyTrace& trace, double tau,
                               std::size_t n_bins = 0);

enum class Method { mean_energy, slope };

std::string to_string(Method m);

struct TemperatureEstimate {
    double value = 0.0;                    // K
    double statistical_uncertainty = 0.0;  // K
    Method method = Method::mean_energy;
    double duration = 0.0;  // s
    double tau = 0.0;       // s
    /// Set when the estimate is not physical (non-positive temperature,
    /// non-negative Boltzmann slope, too few significant bins).
    bool flagged = false;
    std::string note;
};

/// T = <E> / kB from the unfloored energies, with uncertainty
/// sqrt(tau / duration) * T. Throws DataError when duration < 10 tau.
TemperatureEstimate temperature_from_mean(const lockin::EnergyTrace& trace, double tau);
TemperatureEstimate temperature_from_mean(std::span<const double> energies, double lockin_rate,
                                          double tau);

/// Minimum count of a statistically significant bin: ceil((tau / 10) * rate).
std::size_t significance_threshold(double tau, double lockin_rate);

/// Indices of bins whose counts reach the significance threshold.
std::vector<std::size_t> significant_bins(const EnergyHistogram& h);

/// Weighted fit of ln(counts) against bin-centre energy over the significant
/// bins; T = -1 / (kB slope). The per-bin variance of ln(counts) is
/// tau * rate / counts. Needs five significant bins (DataError otherwise);
/// a non-negative slope yields a flagged estimate.
TemperatureEstimate temperature_from_slope(const EnergyHistogram& h);

struct BinCheck {
    double center = 0.0;    // J
    double observed = 0.0;
    double expected = 0.0;
    double delta_n = 0.0;   // one standard deviation
    bool significant = false;
};

struct BandCheck {
    double fraction_within_2 = 0.0;  // of significant bins, |obs - exp| <= 2 delta_n
    double fraction_within_1 = 0.0;  // the same at one delta_n
    std::size_t n_significant = 0;
    std::vector<BinCheck> bins;
};

/// Compares each bin with total * (exp(-a/kBT) - exp(-b/kBT)). The spread
/// delta_n follows delta_n / n = 1 / sqrt(t_bin / tau) with t_bin = n / rate.
BandCheck boltzmann_band_check(const EnergyHistogram& h, const TemperatureEstimate& t);

/// Expected count of bin i for a Boltzmann distribution at temperature T.
double expected_count(const EnergyHistogram& h, std::size_t i, double temperature);

}  // namespace cryotherm::thermo
