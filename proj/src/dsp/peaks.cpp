#include "cryotherm/dsp/peaks.hpp"

#include "cryotherm/errors.hpp"

#include <algorithm>

namespace cryotherm::dsp {

double peak_prominence(std::span<const double> values, std::size_t i) {
    if (i >= values.size()) {
        throw DataError("peak_prominence: index out of range");
    }
    const double h = values[i];
    double left_min = h;
    for (std::size_t j = i; j-- > 0;) {
        if (values[j] > h) {
            break;
        }
        left_min = std::min(left_min, values[j]);
    }
    double right_min = h;
    for (std::size_t j = i + 1; j < values.size(); ++j) {
        if (values[j] > h) {
            break;
        }
        right_min = std::min(right_min, values[j]);
    }
    return h - std::max(left_min, right_min);
}

std::vector<std::size_t> find_peak_indices(std::span<const double> values,
                                           double prominence_threshold) {
    std::vector<std::size_t> peaks;
    const std::size_t n = values.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (values[i] > values[i - 1]) {
            // Walk across a possible plateau.
            std::size_t end = i;
            while (end + 1 < n && values[end + 1] == values[i]) {
                ++end;
            }
            if (end + 1 < n && values[end + 1] < values[i]) {
                const std::size_t mid = (i + end) / 2;
                if (peak_prominence(values, mid) > prominence_threshold) {
                    peaks.push_back(mid);
                }
            }
            i = end + 1;
        } else {
            ++i;
        }
    }
    return peaks;
}

std::vector<double> find_peaks_prominence(const Spectrum& s, double prominence_threshold) {
    const auto idx = find_peak_indices(s.values, prominence_threshold);
    std::vector<double> freqs;
    freqs.reserve(idx.size());
    for (std::size_t i : idx) {
        freqs.push_back(s.freqs[i]);
    }
    return freqs;
}

}  // namespace cryotherm::dsp
