#include "cli_common.hpp"

#include "cryotherm/errors.hpp"
#include "cryotherm/io/csv.hpp"
#include "cryotherm/io/rawseries.hpp"
#include "cryotherm/io/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>

namespace cryotherm::cli {

RunOutput::RunOutput(std::string command, const std::string& out_dir_flag) {
    std::string dir = out_dir_flag;
    if (dir.empty()) {
        if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
            dir = std::filesystem::path(env) / command;
        }
    }
    if (dir.empty()) {
        throw UsageError("no output directory: pass --out or set " + std::string(kOutDirEnv));
    }
    dir_ = dir;
    manifest_.command = std::move(command);
    manifest_.version = CRYOTHERM_VERSION;
}

io::KeyValueReader RunOutput::load_config(const std::string& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
    manifest_.config_name = std::filesystem::path(path).filename().string();
    manifest_.config_hash = io::fnv1a64(text);
    return io::KeyValueReader::parse(text, path);
}

std::string RunOutput::read_input(const std::string& path) {
    auto text = io::read_file(path);
    manifest_.add_input(std::filesystem::path(path).filename().string(), text);
    return text;
}

TimeSeries RunOutput::read_series(const std::string& path) {
    return io::decode_raw_series(read_input(path), path);
}

Spectrum RunOutput::read_spectrum(const std::string& path, double* temperature) {
    const auto table = io::parse_csv(read_input(path), path);
    if (temperature != nullptr) {
        *temperature = io::parse_double(table.require_meta("temperature_k"), path + " temperature_k");
    }
    return io::spectrum_from_table(table);
}

ComplexSweep RunOutput::read_sweep(const std::string& path) {
    return io::sweep_from_table(io::parse_csv(read_input(path), path));
}

void RunOutput::param(const std::string& key, const std::string& value) {
    manifest_.parameters.emplace_back(key, value);
}

void RunOutput::add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
}

void RunOutput::finish() {
    for (const auto& [name, content] : files_) {
        io::write_file(dir_ / name, content);
        manifest_.add_output(name, content);
    }
    io::write_file(dir_ / "manifest.txt", manifest_.render());
    std::cout << "wrote " << files_.size() + 1 << " files to " << dir_.string() << "\n";
}

std::vector<std::string> expand_csv_inputs(const std::vector<std::string>& paths) {
    std::vector<std::string> out;
    for (const auto& p : paths) {
        if (std::filesystem::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& e : std::filesystem::directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".csv") {
                    found.push_back(e.path().string());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    if (out.empty()) {
        throw DataError("no input spectra found");
    }
    return out;
}

}  // namespace cryotherm::cli
