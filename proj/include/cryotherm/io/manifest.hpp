#pragma once

// Run manifest: what went into a command and content hashes of what came out.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cryotherm::io {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Sixteen lowercase hex digits.
std::string hash_hex(std::uint64_t h);

struct Manifest {
    std::string command;
    std::string version;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<std::pair<std::string, std::uint64_t>> inputs;  // name, content hash
    std::string config_name;
    std::uint64_t config_hash = 0;
    std::vector<std::pair<std::string, std::uint64_t>> outputs;  // file name, content hash

    void add_input(const std::string& name, std::string_view content);
    void add_output(const std::string& name, std::string_view content);

    /// Key-value text with no timestamps, so identical runs give identical bytes.
    std::string render() const;
};

}  // namespace cryotherm::io
