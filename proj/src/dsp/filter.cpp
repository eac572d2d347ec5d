#include "cryotherm/dsp/filter.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cryotherm::dsp {

std::vector<Biquad> butterworth_lowpass(int order, double cutoff, double sample_rate) {
    if (order < 2 || order % 2 != 0) {
        throw ConfigError("butterworth_lowpass: order must be even and >= 2");
    }
    if (!(cutoff > 0.0) || !(cutoff < sample_rate / 2.0)) {
        throw ConfigError("butterworth_lowpass: cutoff must lie in (0, fs/2)");
    }
    const double k = 2.0 * sample_rate;
    const double wc = k * std::tan(constants::pi * cutoff / sample_rate);
    const double b = wc * wc;

    std::vector<Biquad> sections;
    sections.reserve(static_cast<std::size_t>(order / 2));
    for (int i = 0; i < order / 2; ++i) {
        // Analog pole pair s^2 + a s + wc^2 with a = 2 wc sin(theta).
        const double theta = constants::pi * (2.0 * i + 1.0) / (2.0 * order);
        const double a = 2.0 * wc * std::sin(theta);
        const double a0 = k * k + a * k + b;
        Biquad s;
        s.b0 = b / a0;
        s.b1 = 2.0 * b / a0;
        s.b2 = b / a0;
        s.a1 = 2.0 * (b - k * k) / a0;
        s.a2 = (k * k - a * k + b) / a0;
        sections.push_back(s);
    }
    return sections;
}

namespace {

template <typename T>
struct SectionState {
    T z1{};
    T z2{};
};

template <typename T>
void set_steady_state(std::span<const Biquad> sections, std::vector<SectionState<T>>& state,
                      T x0) {
    T x = x0;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const Biquad& s = sections[i];
        const T y = x * s.dc_gain();
        state[i].z2 = s.b2 * x - s.a2 * y;
        state[i].z1 = s.b1 * x - s.a1 * y + state[i].z2;
        x = y;
    }
}

template <typename T>
void run_sections(std::span<const Biquad> sections, std::vector<SectionState<T>>& state,
                  std::vector<T>& x) {
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const Biquad s = sections[i];
        T z1 = state[i].z1;
        T z2 = state[i].z2;
        for (T& v : x) {
            const T in = v;
            const T out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

template <typename T>
void filtfilt_impl(std::span<const Biquad> sections, std::vector<T>& x, std::size_t padlen) {
    const std::size_t n = x.size();
    if (n == 0) {
        return;
    }
    padlen = std::min(padlen, n - 1);
    std::vector<T> ext;
    ext.reserve(n + 2 * padlen);
    // Odd extension about each endpoint.
    for (std::size_t i = padlen; i >= 1; --i) {
        ext.push_back(T(2.0) * x.front() - x[i]);
    }
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= padlen; ++i) {
        ext.push_back(T(2.0) * x.back() - x[n - 1 - i]);
    }

    std::vector<SectionState<T>> state(sections.size());
    set_steady_state(sections, state, ext.front());
    run_sections(sections, state, ext);
    std::reverse(ext.begin(), ext.end());
    set_steady_state(sections, state, ext.front());
    run_sections(sections, state, ext);
    std::reverse(ext.begin(), ext.end());
    std::copy(ext.begin() + static_cast<std::ptrdiff_t>(padlen),
              ext.begin() + static_cast<std::ptrdiff_t>(padlen + n), x.begin());
}

template <typename T>
std::vector<T> block_average(const std::vector<T>& x, std::size_t m) {
    const std::size_t n_out = x.size() / m;
    std::vector<T> out(n_out);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < n_out; ++j) {
        T acc{};
        const T* p = x.data() + j * m;
        for (std::size_t i = 0; i < m; ++i) {
            acc += p[i];
        }
        out[j] = acc * inv;
    }
    return out;
}

template <typename SeriesT>
SeriesT decimate_impl(const SeriesT& ts, double cutoff, double out_rate) {
    const DecimationPlan plan = plan_decimation(ts.sample_rate, cutoff, out_rate);
    const std::size_t m1 = plan.pre_average;
    SeriesT mid;
    mid.sample_rate = plan.intermediate_rate;
    mid.start_time = ts.start_time + (static_cast<double>(m1) - 1.0) / (2.0 * ts.sample_rate);
    mid.samples = block_average(ts.samples, m1);

    const auto sections = butterworth_lowpass(kLowpassOrder, cutoff, mid.sample_rate);
    filtfilt(sections, mid.samples, default_padlen(mid.sample_rate, cutoff, mid.samples.size()));

    const std::size_t m2 = plan.post_average;
    SeriesT out = ts;
    out.samples = block_average(mid.samples, m2);
    out.sample_rate = out_rate;
    out.start_time = mid.start_time + (static_cast<double>(m2) - 1.0) / (2.0 * mid.sample_rate);
    return out;
}

}  // namespace

void filtfilt(std::span<const Biquad> sections, std::vector<double>& x, std::size_t padlen) {
    filtfilt_impl(sections, x, padlen);
}

void filtfilt(std::span<const Biquad> sections, std::vector<std::complex<double>>& x,
              std::size_t padlen) {
    filtfilt_impl(sections, x, padlen);
}

std::size_t default_padlen(double sample_rate, double cutoff, std::size_t n) {
    // Three periods of the cutoff frequency covers the ringing of the
    // 8th-order prototype.
    const auto len = static_cast<std::size_t>(std::ceil(3.0 * sample_rate / cutoff));
    return n == 0 ? 0 : std::min(len, n - 1);
}

DecimationPlan plan_decimation(double in_rate, double cutoff, double out_rate) {
    if (!(in_rate > 0.0) || !(out_rate > 0.0) || !(cutoff > 0.0)) {
        throw DataError("lowpass_decimate: rates and cutoff must be positive");
    }
    if (!(cutoff <= out_rate / 2.0) || !(out_rate < in_rate)) {
        throw DataError("lowpass_decimate: need cutoff <= out_rate/2 < in_rate/2");
    }
    const double ratio = in_rate / out_rate;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * ratio) {
        throw DataError("lowpass_decimate: rate mismatch, in_rate/out_rate = " +
                        std::to_string(ratio) + " is not an integer");
    }
    const auto r = static_cast<std::size_t>(rounded);
    const double min_mid = std::max(4.0 * out_rate, 20.0 * cutoff);

    DecimationPlan plan;
    plan.pre_average = 1;
    for (std::size_t d = r; d >= 1; --d) {
        if (r % d == 0 && in_rate / static_cast<double>(d) >= min_mid) {
            plan.pre_average = d;
            break;
        }
    }
    plan.post_average = r / plan.pre_average;
    plan.intermediate_rate = in_rate / static_cast<double>(plan.pre_average);
    return plan;
}

TimeSeries lowpass_decimate(const TimeSeries& ts, double cutoff, double out_rate) {
    return decimate_impl(ts, cutoff, out_rate);
}

ComplexSeries lowpass_decimate(const ComplexSeries& ts, double cutoff, double out_rate) {
    return decimate_impl(ts, cutoff, out_rate);
}

ComplexSeries filter_and_average(ComplexSeries pre_averaged, const DecimationPlan& plan,
                                 double cutoff) {
    const auto sections = butterworth_lowpass(kLowpassOrder, cutoff, plan.intermediate_rate);
    filtfilt(sections, pre_averaged.samples,
             default_padlen(plan.intermediate_rate, cutoff, pre_averaged.samples.size()));
    ComplexSeries out;
    out.samples = block_average(pre_averaged.samples, plan.post_average);
    out.sample_rate = plan.intermediate_rate / static_cast<double>(plan.post_average);
    out.start_time = pre_averaged.start_time +
                     (static_cast<double>(plan.post_average) - 1.0) / (2.0 * plan.intermediate_rate);
    return out;
}

}  // namespace cryotherm::dsp
