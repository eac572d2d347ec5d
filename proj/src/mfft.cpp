#include "cryotherm/mfft.hpp"

#include "cryotherm/dsp/peaks.hpp"
#include "cryotherm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace cryotherm::mfft {

namespace {

// Index range [first, last] of the bins inside the band, with a small
// tolerance so grid points on the band edges are included.
std::pair<std::size_t, std::size_t> band_indices(const Spectrum& s, Band band) {
    if (s.size() < 2) {
        throw DataError("mfft: spectrum has fewer than two bins");
    }
    if (!(band.first < band.second)) {
        throw DataError("mfft: band must satisfy low < high");
    }
    const double eps = 1e-6 * s.bin_width();
    if (s.freqs.front() > band.first + eps || s.freqs.back() < band.second - eps) {
        throw DataError("mfft: band [" + std::to_string(band.first) + ", " +
                        std::to_string(band.second) + "] Hz is not covered by the spectrum");
    }
    const auto lo = std::lower_bound(s.freqs.begin(), s.freqs.end(), band.first - eps);
    const auto hi = std::upper_bound(s.freqs.begin(), s.freqs.end(), band.second + eps);
    if (hi - lo < 2) {
        throw DataError("mfft: band holds fewer than two bins");
    }
    return {static_cast<std::size_t>(lo - s.freqs.begin()),
            static_cast<std::size_t>(hi - s.freqs.begin()) - 1};
}

bool same_grid(const Spectrum& a, const Spectrum& b) {
    if (a.size() != b.size() || a.size() < 2) {
        return false;
    }
    const double tol = 1e-9 * std::max(std::abs(a.freqs.back()), 1.0);
    return std::abs(a.freqs.front() - b.freqs.front()) <= tol &&
           std::abs(a.freqs.back() - b.freqs.back()) <= tol;
}

}  // namespace

bool InterferenceMask::contains(double f, double tolerance) const {
    auto it = std::lower_bound(masked_frequencies.begin(), masked_frequencies.end(), f - tolerance);
    return it != masked_frequencies.end() && *it <= f + tolerance;
}

std::vector<bool> mask_bins(const Spectrum& s, const InterferenceMask& mask) {
    std::vector<bool> out(s.size(), false);
    const double tol = 0.25 * s.bin_width();
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = mask.contains(s.freqs[i], tol);
    }
    return out;
}

InterferenceMask build_mask(std::span<const Spectrum> spectra, const MaskOptions& opts,
                            const InterferenceMask* prior) {
    if (spectra.size() < opts.min_spectra) {
        throw DataError("build_mask: " + std::to_string(spectra.size()) +
                        " spectra supplied, at least " + std::to_string(opts.min_spectra) +
                        " required");
    }
    if (spectra.empty()) {
        throw DataError("build_mask: no spectra");
    }
    if (!(opts.flag_fraction > 0.0 && opts.flag_fraction < 1.0)) {
        throw ConfigError("build_mask: flag_fraction must lie in (0, 1)");
    }
    if (!(opts.segment_width > 0.0) || !(opts.prominence > 0.0)) {
        throw ConfigError("build_mask: segment_width and prominence must be positive");
    }
    const Spectrum& ref = spectra.front();
    for (const auto& s : spectra) {
        if (!same_grid(s, ref)) {
            throw DataError("build_mask: spectra do not share one frequency grid");
        }
    }
    const auto [first, last] = band_indices(ref, opts.band);
    const std::size_t n_band = last - first + 1;

    std::vector<bool> prior_bins(ref.size(), false);
    if (prior != nullptr) {
        prior_bins = mask_bins(ref, *prior);
    }

    // Segment boundaries, as band-relative indices.
    std::vector<std::size_t> seg_start;
    for (std::size_t i = 0; i < n_band; ++i) {
        const double f = ref.freqs[first + i];
        const auto seg = static_cast<std::size_t>(std::floor((f - ref.freqs[first]) / opts.segment_width));
        if (seg_start.size() <= seg) {
            seg_start.push_back(i);
        }
    }
    seg_start.push_back(n_band);

    std::vector<std::size_t> flag_count(n_band, 0);
    std::vector<double> normalized(n_band);
    for (const auto& s : spectra) {
        for (std::size_t g = 0; g + 1 < seg_start.size(); ++g) {
            const std::size_t a = seg_start[g];
            const std::size_t b = seg_start[g + 1];
            // Straight-line background over the unmasked bins of the segment.
            double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = a; i < b; ++i) {
                if (prior_bins[first + i]) {
                    continue;
                }
                const double x = s.freqs[first + i] - s.freqs[first + a];
                const double y = s.values[first + i];
                sw += 1;
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            double slope = 0.0;
            double icpt = sw > 0 ? sy / sw : 0.0;
            const double det = sw * sxx - sx * sx;
            if (sw >= 2 && det > 0.0) {
                slope = (sw * sxy - sx * sy) / det;
                icpt = (sy - slope * sx) / sw;
            }
            const double mean_level = sw > 0 ? sy / sw : 0.0;
            for (std::size_t i = a; i < b; ++i) {
                if (prior_bins[first + i]) {
                    normalized[i] = 1.0;
                    continue;
                }
                double bg = icpt + slope * (s.freqs[first + i] - s.freqs[first + a]);
                if (!(bg > 0.0)) {
                    bg = mean_level;
                }
                normalized[i] = bg > 0.0 ? s.values[first + i] / bg : 1.0;
            }
        }
        for (std::size_t i : dsp::find_peak_indices(normalized, opts.prominence)) {
            ++flag_count[i];
        }
    }

    const double needed = opts.flag_fraction * static_cast<double>(spectra.size());
    std::set<std::size_t> bins;
    for (std::size_t i = 0; i < n_band; ++i) {
        if (static_cast<double>(flag_count[i]) >= needed * (1.0 - 1e-12) && flag_count[i] > 0) {
            const std::size_t lo = i >= opts.guard_bins ? i - opts.guard_bins : 0;
            const std::size_t hi = std::min(n_band - 1, i + opts.guard_bins);
            for (std::size_t j = lo; j <= hi; ++j) {
                bins.insert(first + j);
            }
        }
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (prior_bins[i]) {
            bins.insert(i);
        }
        for (const auto& r : opts.manual_ranges) {
            if (ref.freqs[i] >= r.first && ref.freqs[i] <= r.second) {
                bins.insert(i);
            }
        }
    }

    InterferenceMask mask;
    mask.bin_width_used = opts.segment_width;
    mask.flag_fraction_threshold = opts.flag_fraction;
    mask.n_spectra_used = spectra.size();
    for (std::size_t i : bins) {
        mask.masked_frequencies.push_back(ref.freqs[i]);
    }
    return mask;
}

double spectral_noise_power(const Spectrum& s, Band band, const InterferenceMask& mask) {
    const auto [first, last] = band_indices(s, band);
    const auto masked = mask_bins(s, mask);
    double total_w = 0.0, kept_w = 0.0, acc = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        const double left = i > first ? s.freqs[i] - s.freqs[i - 1] : 0.0;
        const double right = i < last ? s.freqs[i + 1] - s.freqs[i] : 0.0;
        const double w = 0.5 * (left + right);
        total_w += w;
        if (!masked[i]) {
            kept_w += w;
            acc += w * s.values[i];
        }
    }
    if (kept_w < 0.5 * total_w) {
        throw DataError("spectral_noise_power: more than half of the band is masked");
    }
    return acc / kept_w * (band.second - band.first);
}

void validate(const MfftCalibration& cal) {
    if (!(cal.slope > 0.0) || !std::isfinite(cal.slope)) {
        throw ParameterError("mfft calibration: slope must be positive");
    }
    if (!(cal.band.first < cal.band.second)) {
        throw ParameterError("mfft calibration: band must satisfy low < high");
    }
}

MfftCalibration calibrate(std::span<const std::pair<Spectrum, double>> spectra_with_reference,
                          const InterferenceMask& mask, const CalibrationOptions& opts) {
    std::vector<double> t, p;
    for (const auto& [s, temp] : spectra_with_reference) {
        if (temp >= opts.reference_range.first && temp <= opts.reference_range.second) {
            t.push_back(temp);
            p.push_back(spectral_noise_power(s, opts.band, mask));
        }
    }
    if (t.size() < 2) {
        throw DataError("calibrate: fewer than two reference points inside the reference range");
    }
    const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
    if (*tmax < opts.min_span_ratio * *tmin * (1.0 - 1e-12)) {
        throw DataError("calibrate: reference temperatures span " + std::to_string(*tmax / *tmin) +
                        "x, need " + std::to_string(opts.min_span_ratio) + "x");
    }
    auto fit = dsp::fit_linear(t, p);
    if (opts.weighting == CalibrationWeighting::relative) {
        std::vector<double> w(t.size());
        double typical = 0.0;
        for (double v : p) {
            typical += std::abs(v) / static_cast<double>(p.size());
        }
        for (int pass = 0; pass < 10; ++pass) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double model = fit.slope * t[i] + fit.intercept;
                // Non-positive model values get the typical weight.
                const double level = model > 0.0 ? model : typical;
                w[i] = 1.0 / (level * level);
            }
            const auto next = dsp::fit_linear(t, p, w);
            const bool settled = std::abs(next.slope - fit.slope) <= 1e-10 * std::abs(next.slope);
            fit = next;
            if (settled) {
                break;
            }
        }
    }
    if (!(fit.slope > 0.0)) {
        throw DataError("calibrate: fitted slope is not positive");
    }

    MfftCalibration cal;
    cal.band = opts.band;
    cal.mask = mask;
    cal.slope = fit.slope;
    cal.intercept = fit.intercept;
    cal.slope_error = fit.slope_error;
    cal.intercept_error = fit.intercept_error;
    cal.reference_range = opts.reference_range;
    cal.n_points = t.size();
    const double dof = t.size() > 2 ? static_cast<double>(t.size() - 2) : 1.0;
    double ss_plain = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = p[i] - (fit.slope * t[i] + fit.intercept);
        ss_plain += r * r;
    }
    cal.residual_sd = std::sqrt(ss_plain / dof);
    const double mean_p = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        ss_tot += (p[i] - mean_p) * (p[i] - mean_p);
        const double r = p[i] - (fit.slope * t[i] + fit.intercept);
        ss_res += r * r;
    }
    cal.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return cal;
}

MfftTemperature temperature(const Spectrum& s, const MfftCalibration& cal) {
    validate(cal);
    MfftTemperature out;
    out.power = spectral_noise_power(s, cal.band, cal.mask);
    out.value = (out.power - cal.intercept) / cal.slope;
    out.flagged = !(out.power > cal.intercept);
    return out;
}

IntervalEstimate interval_uncertainty(std::span<const Spectrum> spectra, const MfftCalibration& cal) {
    if (spectra.size() < 30) {
        throw DataError("interval_uncertainty: " + std::to_string(spectra.size()) +
                        " spectra supplied, at least 30 required");
    }
    std::vector<double> temps;
    temps.reserve(spectra.size());
    for (const auto& s : spectra) {
        temps.push_back(temperature(s, cal).value);
    }
    IntervalEstimate out;
    out.n_spectra = temps.size();
    const auto [lo, hi] = std::minmax_element(temps.begin(), temps.end());
    if (*hi - *lo <= 1e-12 * std::max(std::abs(*hi), std::abs(*lo))) {
        out.mean = std::accumulate(temps.begin(), temps.end(), 0.0) / static_cast<double>(temps.size());
        out.two_sigma = 0.0;
        out.good_fit = true;
        return out;
    }
    out.fit = dsp::fit_gaussian_hist(temps);
    out.mean = out.fit.mean;
    out.two_sigma = 2.0 * out.fit.sigma;
    out.good_fit = out.fit.good_fit && out.fit.converged;
    return out;
}

}  // namespace cryotherm::mfft
