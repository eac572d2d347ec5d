#include "cryotherm/io/manifest.hpp"

#include <cstdio>

namespace cryotherm::io {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Manifest::add_input(const std::string& name, std::string_view content) {
    inputs.emplace_back(name, fnv1a64(content));
}

void Manifest::add_output(const std::string& name, std::string_view content) {
    outputs.emplace_back(name, fnv1a64(content));
}

std::string Manifest::render() const {
    std::string out = "# cryotherm run manifest\n";
    out += "command = " + command + "\n";
    out += "version = " + version + "\n";
    out += "hash = fnv1a64\n";
    if (!config_name.empty()) {
        out += "config = " + config_name + "\n";
        out += "config_hash = " + hash_hex(config_hash) + "\n";
    }
    for (const auto& [k, v] : parameters) {
        out += "param." + k + " = " + v + "\n";
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        out += "input." + std::to_string(i) + " = " + inputs[i].first + " " +
               hash_hex(inputs[i].second) + "\n";
    }
    for (const auto& [name, h] : outputs) {
        out += "output." + name + " = " + hash_hex(h) + "\n";
    }
    return out;
}

}  // namespace cryotherm::io
