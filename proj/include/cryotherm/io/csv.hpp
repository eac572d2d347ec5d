#pragma once

// Comma-separated tables with a '#'-prefixed "key: value" metadata header,
// and the typed tables used by the toolkit.

#include "cryotherm/analysis.hpp"
#include "cryotherm/lockin.hpp"
#include "cryotherm/mfft.hpp"
#include "cryotherm/series.hpp"
#include "cryotherm/thermo.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cryotherm::io {

struct CsvTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void set_meta(const std::string& key, const std::string& value);
    std::optional<std::string> meta_value(std::string_view key) const;
    /// Metadata value that must be present (FormatError otherwise).
    std::string require_meta(std::string_view key) const;
    /// Column index by name; FormatError when absent.
    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::size_t col, bool allow_missing = false) const;
};

std::string to_csv(const CsvTable& t);

/// Throws FormatError with a line number for ragged rows or a missing header.
CsvTable parse_csv(std::string_view text, std::string_view source = "csv");

CsvTable spectrum_table(const Spectrum& s);
Spectrum spectrum_from_table(const CsvTable& t);

CsvTable sweep_table(const ComplexSweep& s);
ComplexSweep sweep_from_table(const CsvTable& t);

CsvTable mask_table(const mfft::InterferenceMask& m);
mfft::InterferenceMask mask_from_table(const CsvTable& t);

/// One row per point; run labels must not contain commas or line breaks.
/// Missing uncertainties are written as NA.
CsvTable runs_table(const std::vector<analysis::RunRecord>& runs);
std::vector<analysis::RunRecord> runs_from_table(const CsvTable& t);

CsvTable energy_table(const lockin::EnergyTrace& trace);
/// Reads back times and energies (floored and raw) plus the scalar metadata.
lockin::EnergyTrace energy_from_table(const CsvTable& t);

/// Histogram with the expected Boltzmann counts and band flags.
CsvTable histogram_table(const thermo::EnergyHistogram& h, const thermo::BandCheck& check);

}  // namespace cryotherm::io
