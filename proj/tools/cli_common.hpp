#pragma once

// Shared plumbing for the command-line front end.

#include "cryotherm/io/keyvalue.hpp"
#include "cryotherm/io/manifest.hpp"
#include "cryotherm/series.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cryotherm::cli {

/// Bad invocation: exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kOutDirEnv = "CRYOTHERM_OUT_DIR";

/// Collects output files in memory and writes them with a manifest.
class RunOutput {
public:
    RunOutput(std::string command, const std::string& out_dir_flag);

    /// Reads a config file, hashes it into the manifest and parses it.
    io::KeyValueReader load_config(const std::string& path);
    /// Reads an input file and records its hash.
    std::string read_input(const std::string& path);
    TimeSeries read_series(const std::string& path);
    Spectrum read_spectrum(const std::string& path, double* temperature = nullptr);
    ComplexSweep read_sweep(const std::string& path);

    void param(const std::string& key, const std::string& value);
    void add(const std::string& name, std::string content);
    /// Writes every file plus manifest.txt; prints the directory.
    void finish();

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    io::Manifest manifest_;
    std::vector<std::pair<std::string, std::string>> files_;
};

/// Expands directories into their *.csv files (sorted); files pass through.
std::vector<std::string> expand_csv_inputs(const std::vector<std::string>& paths);

void add_simulate(CLI::App& app);
void add_psd(CLI::App& app);
void add_lockin(CLI::App& app);
void add_temp(CLI::App& app);
void add_mfft_calibrate(CLI::App& app);
void add_mfft_temp(CLI::App& app);
void add_dispcal(CLI::App& app);
void add_fit(CLI::App& app);
void add_report(CLI::App& app);

}  // namespace cryotherm::cli
