#pragma once

// Number formatting and whole-file helpers shared by the file formats.

#include <filesystem>
#include <string>
#include <string_view>

namespace cryotherm::io {

/// Shortest round-trip decimal form (17 significant digits); "nan", "inf".
std::string format_exact(double v);

/// Six significant digits, for figures and human-readable summaries.
std::string format_short(double v);

/// Strict parse of a whole field; accepts "nan", "NA" and empty as NaN when
/// allow_missing is set. Throws FormatError naming the context otherwise.
double parse_double(std::string_view s, std::string_view context, bool allow_missing = false);
long long parse_integer(std::string_view s, std::string_view context);

std::string_view trim(std::string_view s);

/// Reads a whole file in binary mode. Throws FormatError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes bytes, creating parent directories. Throws FormatError on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace cryotherm::io
