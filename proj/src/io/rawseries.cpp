#include "cryotherm/io/rawseries.hpp"

#include "cryotherm/errors.hpp"
#include "cryotherm/io/text.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>

namespace cryotherm::io {

namespace {

void put_le(std::string& out, double v) {
    auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>(u & 0xffu));
        u >>= 8;
    }
}

double get_le(const char* p) {
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) {
        u = (u << 8) | static_cast<unsigned char>(p[i]);
    }
    return std::bit_cast<double>(u);
}

}  // namespace

std::string encode_raw_series(const TimeSeries& ts) {
    if (!(ts.sample_rate > 0.0)) {
        throw DataError("raw series: sample_rate must be positive");
    }
    for (const auto& s : {ts.channel, ts.unit}) {
        if (s.find('\n') != std::string::npos) {
            throw DataError("raw series: header values must not contain line breaks");
        }
    }
    std::string out(kRawSeriesMagic);
    out += "sample_rate: " + format_exact(ts.sample_rate) + "\n";
    out += "start_epoch_ns: " + std::to_string(ts.start_epoch_ns) + "\n";
    out += "start_time: " + format_exact(ts.start_time) + "\n";
    out += "channel: " + ts.channel + "\n";
    out += "unit: " + ts.unit + "\n";
    out += "sample_count: " + std::to_string(ts.samples.size()) + "\n";
    out += "\n";
    out.reserve(out.size() + 8 * ts.samples.size());
    for (double v : ts.samples) {
        put_le(out, v);
    }
    return out;
}

TimeSeries decode_raw_series(std::string_view bytes, std::string_view source) {
    const std::string src(source);
    if (bytes.empty()) {
        throw FormatError(src + ": empty file");
    }
    if (bytes.substr(0, kRawSeriesMagic.size()) != kRawSeriesMagic) {
        throw FormatError(src + ": not an MKTS1 series (bad magic)");
    }
    std::size_t pos = kRawSeriesMagic.size();
    std::size_t line_no = 1;
    std::map<std::string, std::string, std::less<>> header;
    bool closed = false;
    while (pos < bytes.size()) {
        const auto nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) {
            break;
        }
        const auto line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.empty()) {
            closed = true;
            break;
        }
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw FormatError(src + ":" + std::to_string(line_no) + ": malformed header line");
        }
        header[std::string(trim(line.substr(0, colon)))] = std::string(trim(line.substr(colon + 1)));
    }
    if (!closed) {
        throw FormatError(src + ": header not terminated by a blank line");
    }
    auto field = [&](std::string_view key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) {
            throw FormatError(src + ": header lacks '" + std::string(key) + "'");
        }
        return it->second;
    };
    TimeSeries ts;
    ts.sample_rate = parse_double(field("sample_rate"), src + " sample_rate");
    if (!(ts.sample_rate > 0.0) || !std::isfinite(ts.sample_rate)) {
        throw FormatError(src + ": sample_rate must be positive");
    }
    ts.start_epoch_ns = parse_integer(field("start_epoch_ns"), src + " start_epoch_ns");
    if (header.count("start_time") != 0) {
        ts.start_time = parse_double(header["start_time"], src + " start_time");
    }
    if (header.count("channel") != 0) {
        ts.channel = header["channel"];
    }
    if (header.count("unit") != 0) {
        ts.unit = header["unit"];
    }
    const long long count = parse_integer(field("sample_count"), src + " sample_count");
    const std::size_t payload = bytes.size() - pos;
    if (count <= 0) {
        throw FormatError(src + ": series holds no samples");
    }
    if (payload % 8 != 0 || payload / 8 != static_cast<std::size_t>(count)) {
        throw FormatError(src + ": sample_count " + std::to_string(count) +
                          " does not match payload of " + std::to_string(payload) + " bytes");
    }
    ts.samples.resize(static_cast<std::size_t>(count));
    const char* p = bytes.data() + pos;
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
        ts.samples[i] = get_le(p + 8 * i);
    }
    return ts;
}

void write_raw_series(const std::filesystem::path& path, const TimeSeries& ts) {
    write_file(path, encode_raw_series(ts));
}

TimeSeries read_raw_series(const std::filesystem::path& path) {
    return decode_raw_series(read_file(path), path.string());
}

}  // namespace cryotherm::io
