#include "cryotherm/io/text.hpp"

#include "cryotherm/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace cryotherm::io {

namespace {

std::string format_with(double v, const char* spec) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::string format_exact(double v) { return format_with(v, "%.17g"); }

std::string format_short(double v) { return format_with(v, "%.6g"); }

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view s, std::string_view context, bool allow_missing) {
    s = trim(s);
    if (s == "nan" || s == "NaN" || s == "NA" || s.empty()) {
        if (allow_missing || s == "nan" || s == "NaN") {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const char* begin = s.data();
    if (!s.empty() && s.front() == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw FormatError(std::string(context) + ": expected a number, got '" + std::string(s) + "'");
    }
    return v;
}

long long parse_integer(std::string_view s, std::string_view context) {
    s = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw FormatError(std::string(context) + ": expected an integer, got '" + std::string(s) + "'");
    }
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open '" + path.string() + "' for reading");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open '" + path.string() + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw FormatError("write to '" + path.string() + "' failed");
    }
}

}  // namespace cryotherm::io
