#pragma once

// Run-level model fits of cantilever temperature against bath temperature
// and the comparison report.

#include "cryotherm/physmodel.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cryotherm::analysis {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunPoint {
    double t_mfft = 0.0;       // K
    double sigma_mfft = kNaN;  // K, NaN when not available
    double t_cant = 0.0;       // K
    double sigma_cant = kNaN;  // K, NaN when not available
};

struct RunRecord {
    std::string label;
    std::vector<RunPoint> points;
    std::optional<physmodel::ResonatorParams> resonator;
    std::optional<physmodel::DisplacementConversion> kappa;
};

/// Throws DataError for non-positive temperatures or negative uncertainties.
void validate(const RunRecord& run);

struct ProportionalityFit {
    double c = 0.0;
    double c_error = 0.0;
    std::size_t n_points = 0;
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
};

/// T_cant = c T_MFFT over the points with T_MFFT > min_tmfft. Weights are
/// 1 / (sigma_cant^2 + c^2 sigma_mfft^2), with the bath term only where both
/// uncertainties are present; unit weights when none is given. The error is
/// scaled by the reduced chi^2. Throws DataError with fewer than two points
/// above the cutoff.
ProportionalityFit fit_proportionality(const RunRecord& run, double min_tmfft = 0.008);

struct SaturationOptions {
    /// Keep n at its initial value.
    bool fix_n = false;
    double n_initial = 2.0;
    /// Overall scale c in T = c (T_MFFT^n + T0^n)^(1/n).
    double scale = 1.0;
};

struct SaturationFit {
    double t0 = 0.0;  // K
    double n = 0.0;
    double c = 1.0;   // fixed scale
    double t0_error = 0.0;
    double n_error = 0.0;
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    bool converged = false;
    /// False when the data cannot constrain (T0, n): errors exceed the values.
    bool identifiable = false;
    std::string domain_note;

    double evaluate(double t_mfft) const;
};

/// Weighted nonlinear fit of T_cant = c (T_MFFT^n + T0^n)^(1/n) starting from
/// T0 = min(T_cant), n = 2. Errors are scaled by the reduced chi^2; the
/// identifiability test uses the stated uncertainties when every point has
/// one. Throws DataError with fewer than four points.
SaturationFit fit_saturation(const RunRecord& run, const SaturationOptions& opts = {});

struct ReportFile {
    std::string name;
    std::string content;
};

struct RunSummary {
    std::string label;
    std::optional<ProportionalityFit> proportionality;
    std::optional<SaturationFit> saturation;
    std::vector<std::string> warnings;
};

struct Report {
    std::vector<RunSummary> runs;
    std::vector<ReportFile> files;  // runs.csv, fits.csv, comparison.svg, summary.txt
};

/// Fits every run where possible and assembles CSV tables, an SVG scatter
/// with one c-line per fitted run plus the identity line, and a key-value
/// summary. Throws DataError for an empty run list.
Report run_report(const std::vector<RunRecord>& runs, double min_tmfft = 0.008);

}  // namespace cryotherm::analysis
