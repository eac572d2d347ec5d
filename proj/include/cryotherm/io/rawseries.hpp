#pragma once

// Binary time-series file: the magic line "MKTS1", "key: value" header lines
// closed by a blank line, then little-endian float64 samples.

#include "cryotherm/series.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace cryotherm::io {

inline constexpr std::string_view kRawSeriesMagic = "MKTS1\n";

std::string encode_raw_series(const TimeSeries& ts);

/// Throws FormatError for a bad magic, malformed header, non-positive rate,
/// empty payload or a sample_count that disagrees with the payload length.
TimeSeries decode_raw_series(std::string_view bytes, std::string_view source = "series");

void write_raw_series(const std::filesystem::path& path, const TimeSeries& ts);
TimeSeries read_raw_series(const std::filesystem::path& path);

}  // namespace cryotherm::io
