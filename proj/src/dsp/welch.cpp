#include "cryotherm/dsp/welch.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <algorithm>
#include <complex>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>

namespace cryotherm {

void validate(const Spectrum& s) {
    if (s.freqs.size() != s.values.size()) {
        throw DataError("spectrum: freqs and values differ in length");
    }
    for (std::size_t i = 1; i < s.freqs.size(); ++i) {
        if (!(s.freqs[i] > s.freqs[i - 1])) {
            throw DataError("spectrum: frequency grid not strictly increasing");
        }
    }
    for (double v : s.values) {
        if (!(v >= 0.0)) {
            throw DataError("spectrum: negative or NaN power density");
        }
    }
    if (s.n_averages < 1) {
        throw DataError("spectrum: n_averages must be at least 1");
    }
}

namespace dsp {

namespace {

// The FFTW planner is not re-entrant; execution of a finished plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

/// Real-to-complex transform of a fixed length with owned buffers.
class RealFft {
public:
    explicit RealFft(std::size_t n)
        : n_(n),
          in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        std::lock_guard lock(planner_mutex());
        // FFTW_ESTIMATE keeps the algorithm choice, and therefore the
        // rounding, identical from run to run.
        plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(),
                                         FFTW_ESTIMATE));
    }

    double* input() { return in_.get(); }
    fftw_complex* raw_output() { return out_.get(); }
    std::complex<double> output(std::size_t k) const {
        return {out_.get()[k][0], out_.get()[k][1]};
    }
    void execute() { fftw_execute(plan_.get()); }
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    std::unique_ptr<double, FftwFree> in_;
    std::unique_ptr<fftw_complex, FftwFree> out_;
    std::unique_ptr<fftw_plan_s, PlanDeleter> plan_;
};

void check_segment(const TimeSeries& ts, std::size_t segment_length) {
    if (!(ts.sample_rate > 0.0)) {
        throw DataError("welch_psd: sample rate must be positive");
    }
    if (segment_length < 2 || segment_length % 2 != 0) {
        throw DataError("welch_psd: segment length must be even and at least 2");
    }
    if (ts.samples.size() < segment_length) {
        throw DataError("welch_psd: series shorter than one segment (" +
                        std::to_string(ts.samples.size()) + " < " +
                        std::to_string(segment_length) + ")");
    }
}

}  // namespace

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(constants::two_pi * static_cast<double>(i) /
                                    static_cast<double>(n));
    }
    return w;
}

Spectrum welch_psd(const TimeSeries& ts, std::size_t segment_length) {
    check_segment(ts, segment_length);
    const std::size_t n = segment_length;
    const std::size_t step = n / 2;
    const std::size_t n_segments = (ts.samples.size() - n) / step + 1;
    const std::size_t n_bins = n / 2 + 1;

    const auto window = hann_window(n);
    const double window_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);

    RealFft fft(n);
    std::vector<double> accum(n_bins, 0.0);
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
        const double* x = ts.samples.data() + seg * step;
        const double mean = std::accumulate(x, x + n, 0.0) / static_cast<double>(n);
        double* in = fft.input();
        for (std::size_t i = 0; i < n; ++i) {
            in[i] = (x[i] - mean) * window[i];
        }
        fft.execute();
        for (std::size_t k = 0; k < n_bins; ++k) {
            accum[k] += std::norm(fft.output(k));
        }
    }

    Spectrum s;
    s.unit = ts.unit + "^2/Hz";
    s.window = "hann";
    s.overlap_fraction = 0.5;
    s.n_averages = n_segments;
    s.freqs.resize(n_bins);
    s.values.resize(n_bins);
    const double df = ts.sample_rate / static_cast<double>(n);
    const double scale = 1.0 / (ts.sample_rate * window_power * static_cast<double>(n_segments));
    for (std::size_t k = 0; k < n_bins; ++k) {
        s.freqs[k] = df * static_cast<double>(k);
        const bool edge = (k == 0 || k == n_bins - 1);
        s.values[k] = accum[k] * scale * (edge ? 1.0 : 2.0);
    }
    return s;
}

double integrated_power(const Spectrum& s) {
    return std::accumulate(s.values.begin(), s.values.end(), 0.0) * s.bin_width();
}

double windowed_segment_variance(const TimeSeries& ts, std::size_t segment_length) {
    check_segment(ts, segment_length);
    const std::size_t n = segment_length;
    const std::size_t step = n / 2;
    const std::size_t n_segments = (ts.samples.size() - n) / step + 1;
    const auto window = hann_window(n);
    const double window_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);
    double total = 0.0;
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
        const double* x = ts.samples.data() + seg * step;
        const double mean = std::accumulate(x, x + n, 0.0) / static_cast<double>(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (x[i] - mean) * window[i];
            acc += v * v;
        }
        total += acc / window_power;
    }
    return total / static_cast<double>(n_segments);
}

std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (n == 0) {
        return {};
    }
    max_lag = std::min(max_lag, n - 1);
    std::size_t len = 1;
    while (len < 2 * n) {
        len <<= 1;
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);

    RealFft forward(len);
    double* in = forward.input();
    for (std::size_t i = 0; i < len; ++i) {
        in[i] = i < n ? x[i] - mean : 0.0;
    }
    forward.execute();

    const std::size_t n_bins = len / 2 + 1;
    std::unique_ptr<fftw_complex, FftwFree> spec(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_bins)));
    std::unique_ptr<double, FftwFree> back(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double p = std::norm(forward.output(k));
        spec.get()[k][0] = p;
        spec.get()[k][1] = 0.0;
    }
    std::unique_ptr<fftw_plan_s, PlanDeleter> inverse;
    {
        std::lock_guard lock(planner_mutex());
        inverse.reset(fftw_plan_dft_c2r_1d(static_cast<int>(len), spec.get(), back.get(),
                                           FFTW_ESTIMATE));
    }
    fftw_execute(inverse.get());

    std::vector<double> c(max_lag + 1);
    const double scale = 1.0 / (static_cast<double>(len) * static_cast<double>(n));
    for (std::size_t k = 0; k <= max_lag; ++k) {
        c[k] = back.get()[k] * scale;
    }
    return c;
}

double variance(std::span<const double> x) {
    if (x.empty()) {
        return 0.0;
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double acc = 0.0;
    for (double v : x) {
        acc += (v - mean) * (v - mean);
    }
    return acc / static_cast<double>(x.size());
}

}  // namespace dsp
}  // namespace cryotherm
