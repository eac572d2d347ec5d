#pragma once

// "key = value" configuration text with '#' comments.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cryotherm::io {

struct KeyValueEntry {
    std::string value;
    std::size_t line = 0;
};

/// Parsed key-value document. Getters record which keys were read so that
/// reject_unknown() can report the rest.
class KeyValueReader {
public:
    /// Throws ConfigError with a line number for malformed lines or
    /// duplicate keys.
    static KeyValueReader parse(std::string_view text, std::string source = "config");
    static KeyValueReader load(const std::string& path);

    bool has(std::string_view key) const;
    std::string get_string(std::string_view key) const;
    std::string get_string(std::string_view key, const std::string& fallback) const;
    double get_double(std::string_view key) const;
    double get_double(std::string_view key, double fallback) const;
    std::optional<double> get_optional_double(std::string_view key) const;
    std::int64_t get_int(std::string_view key) const;
    std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
    std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;
    /// Comma-separated numbers.
    std::vector<double> get_doubles(std::string_view key) const;

    /// Marks keys as consumed without reading them.
    void accept(std::string_view key) const;
    /// Throws ConfigError naming the first key (by line) nobody read.
    void reject_unknown() const;

    const std::string& source() const { return source_; }
    const std::map<std::string, KeyValueEntry, std::less<>>& entries() const { return entries_; }

private:
    const KeyValueEntry& require(std::string_view key) const;
    std::string where(const KeyValueEntry& e) const;

    std::string source_;
    std::map<std::string, KeyValueEntry, std::less<>> entries_;
    mutable std::set<std::string, std::less<>> used_;
};

/// Ordered writer producing text that KeyValueReader parses back.
class KeyValueWriter {
public:
    void comment(std::string_view text);
    void put(std::string_view key, std::string_view value);
    void put(std::string_view key, double value);
    void put(std::string_view key, std::int64_t value);
    void put_uint(std::string_view key, std::uint64_t value);
    void put_bool(std::string_view key, bool value);
    void blank();
    const std::string& str() const { return text_; }

private:
    std::string text_;
};

}  // namespace cryotherm::io
