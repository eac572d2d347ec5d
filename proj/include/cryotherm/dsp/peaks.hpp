#pragma once

#include "cryotherm/series.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cryotherm::dsp {

/// Topographic prominence of the local maximum at index i: its height above
/// the higher of the two minima reached before the signal climbs above the
/// peak again (or the array ends) on either side.
double peak_prominence(std::span<const double> values, std::size_t i);

/// Indices of local maxima (flat tops report their left-centre sample) whose
/// prominence exceeds the threshold. Values are expected to be normalized to
/// their background already.
std::vector<std::size_t> find_peak_indices(std::span<const double> values,
                                           double prominence_threshold);

/// Frequencies of the prominent peaks of a background-normalized spectrum.
std::vector<double> find_peaks_prominence(const Spectrum& s, double prominence_threshold);

}  // namespace cryotherm::dsp
