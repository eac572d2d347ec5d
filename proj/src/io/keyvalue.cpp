#include "cryotherm/io/keyvalue.hpp"

#include "cryotherm/errors.hpp"
#include "cryotherm/io/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace cryotherm::io {

KeyValueReader KeyValueReader::parse(std::string_view text, std::string source) {
    KeyValueReader r;
    r.source_ = std::move(source);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(r.source_ + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + std::string(line) + "'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(r.source_ + ":" + std::to_string(line_no) + ": empty key");
        }
        if (const auto it = r.entries_.find(key); it != r.entries_.end()) {
            throw ConfigError(r.source_ + ":" + std::to_string(line_no) + ": duplicate key '" +
                              key + "' (first set on line " + std::to_string(it->second.line) +
                              ")");
        }
        r.entries_.emplace(key, KeyValueEntry{value, line_no});
        if (end == text.size()) {
            break;
        }
    }
    return r;
}

KeyValueReader KeyValueReader::load(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
    return parse(text, path);
}

bool KeyValueReader::has(std::string_view key) const {
    return entries_.find(key) != entries_.end();
}

std::string KeyValueReader::where(const KeyValueEntry& e) const {
    return source_ + ":" + std::to_string(e.line);
}

const KeyValueEntry& KeyValueReader::require(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError(source_ + ": missing required key '" + std::string(key) + "'");
    }
    used_.emplace(key);
    return it->second;
}

std::string KeyValueReader::get_string(std::string_view key) const {
    return require(key).value;
}

std::string KeyValueReader::get_string(std::string_view key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double KeyValueReader::get_double(std::string_view key) const {
    const auto& e = require(key);
    try {
        return parse_double(e.value, key);
    } catch (const FormatError&) {
        throw ConfigError(where(e) + ": key '" + std::string(key) + "' expects a number, got '" +
                          e.value + "'");
    }
}

double KeyValueReader::get_double(std::string_view key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::optional<double> KeyValueReader::get_optional_double(std::string_view key) const {
    if (!has(key)) {
        return std::nullopt;
    }
    return get_double(key);
}

std::int64_t KeyValueReader::get_int(std::string_view key) const {
    const auto& e = require(key);
    try {
        return parse_integer(e.value, key);
    } catch (const FormatError&) {
        throw ConfigError(where(e) + ": key '" + std::string(key) +
                          "' expects an integer, got '" + e.value + "'");
    }
}

std::int64_t KeyValueReader::get_int(std::string_view key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueReader::get_uint(std::string_view key, std::uint64_t fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const auto& e = require(key);
    std::uint64_t v = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError(where(e) + ": key '" + std::string(key) +
                          "' expects a non-negative integer, got '" + e.value + "'");
    }
    return v;
}

bool KeyValueReader::get_bool(std::string_view key, bool fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const auto& e = require(key);
    if (e.value == "true" || e.value == "yes" || e.value == "1") {
        return true;
    }
    if (e.value == "false" || e.value == "no" || e.value == "0") {
        return false;
    }
    throw ConfigError(where(e) + ": key '" + std::string(key) + "' expects true or false, got '" +
                      e.value + "'");
}

std::vector<double> KeyValueReader::get_doubles(std::string_view key) const {
    const auto& e = require(key);
    std::vector<double> out;
    std::string_view rest = e.value;
    while (true) {
        const auto comma = rest.find(',');
        const auto field = trim(rest.substr(0, comma));
        try {
            out.push_back(parse_double(field, key));
        } catch (const FormatError&) {
            throw ConfigError(where(e) + ": key '" + std::string(key) +
                              "' expects comma-separated numbers, got '" + e.value + "'");
        }
        if (comma == std::string_view::npos) {
            break;
        }
        rest = rest.substr(comma + 1);
    }
    return out;
}

void KeyValueReader::accept(std::string_view key) const {
    used_.emplace(key);
}

void KeyValueReader::reject_unknown() const {
    const KeyValueEntry* first = nullptr;
    std::string first_key;
    for (const auto& [k, e] : entries_) {
        if (used_.find(k) == used_.end() && (first == nullptr || e.line < first->line)) {
            first = &e;
            first_key = k;
        }
    }
    if (first != nullptr) {
        throw ConfigError(where(*first) + ": unknown key '" + first_key + "'");
    }
}

void KeyValueWriter::comment(std::string_view text) {
    text_ += "# ";
    text_ += text;
    text_ += '\n';
}

void KeyValueWriter::put(std::string_view key, std::string_view value) {
    text_ += key;
    text_ += " = ";
    text_ += value;
    text_ += '\n';
}

void KeyValueWriter::put(std::string_view key, double value) {
    put(key, format_exact(value));
}

void KeyValueWriter::put(std::string_view key, std::int64_t value) {
    put(key, std::to_string(value));
}

void KeyValueWriter::put_uint(std::string_view key, std::uint64_t value) {
    put(key, std::to_string(value));
}

void KeyValueWriter::put_bool(std::string_view key, bool value) {
    put(key, value ? std::string_view("true") : std::string_view("false"));
}

void KeyValueWriter::blank() {
    text_ += '\n';
}

}  // namespace cryotherm::io
