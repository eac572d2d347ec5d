#include "cryotherm/io/csv.hpp"

#include "cryotherm/errors.hpp"
#include "cryotherm/io/text.hpp"

#include <cmath>
#include <map>

namespace cryotherm::io {

void CsvTable::set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : meta) {
        if (k == key) {
            v = value;
            return;
        }
    }
    meta.emplace_back(key, value);
}

std::optional<std::string> CsvTable::meta_value(std::string_view key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

std::string CsvTable::require_meta(std::string_view key) const {
    auto v = meta_value(key);
    if (!v) {
        throw FormatError("csv: missing metadata '" + std::string(key) + "'");
    }
    return *v;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) {
            return i;
        }
    }
    throw FormatError("csv: missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col, bool allow_missing) const {
    return parse_double(rows.at(row).at(col),
                        "csv row " + std::to_string(row + 1) + " column '" + columns.at(col) + "'",
                        allow_missing);
}

std::string to_csv(const CsvTable& t) {
    std::string out;
    for (const auto& [k, v] : t.meta) {
        out += "# " + k + ": " + v + "\n";
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        out += (i ? "," : "") + t.columns[i];
    }
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += (i ? "," : "") + row[i];
        }
        out += "\n";
    }
    return out;
}

namespace {

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        fields.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return fields;
}

}  // namespace

CsvTable parse_csv(std::string_view text, std::string_view source) {
    CsvTable t;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (trim(line).empty()) {
            continue;
        }
        if (line.front() == '#') {
            if (have_header) {
                continue;
            }
            const auto body = trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon != std::string_view::npos) {
                t.meta.emplace_back(std::string(trim(body.substr(0, colon))),
                                    std::string(trim(body.substr(colon + 1))));
            }
            continue;
        }
        auto fields = split_fields(line);
        if (!have_header) {
            t.columns = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.columns.size()) {
            throw FormatError(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(t.columns.size()) + " fields, found " +
                              std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) {
        throw FormatError(std::string(source) + ": no column header");
    }
    return t;
}

// ---------------------------------------------------------------------------

CsvTable spectrum_table(const Spectrum& s) {
    CsvTable t;
    t.set_meta("kind", "spectrum");
    t.set_meta("unit", s.unit);
    t.set_meta("window", s.window);
    t.set_meta("overlap_fraction", format_exact(s.overlap_fraction));
    t.set_meta("n_averages", std::to_string(s.n_averages));
    t.columns = {"freq_hz", "psd"};
    for (std::size_t i = 0; i < s.size(); ++i) {
        t.rows.push_back({format_exact(s.freqs[i]), format_exact(s.values[i])});
    }
    return t;
}

Spectrum spectrum_from_table(const CsvTable& t) {
    Spectrum s;
    s.unit = t.meta_value("unit").value_or("V^2/Hz");
    s.window = t.meta_value("window").value_or("hann");
    if (auto v = t.meta_value("overlap_fraction")) {
        s.overlap_fraction = parse_double(*v, "overlap_fraction");
    }
    if (auto v = t.meta_value("n_averages")) {
        s.n_averages = static_cast<std::size_t>(parse_integer(*v, "n_averages"));
    }
    const auto cf = t.column("freq_hz");
    const auto cv = t.column("psd");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        s.freqs.push_back(t.number(r, cf));
        s.values.push_back(t.number(r, cv));
    }
    validate(s);
    return s;
}

CsvTable sweep_table(const ComplexSweep& s) {
    CsvTable t;
    t.set_meta("kind", "sweep");
    t.set_meta("direction", s.direction == SweepDirection::up ? "up" : "down");
    t.set_meta("resonance_covered", s.resonance_covered ? "true" : "false");
    t.columns = {"freq_hz", "re_v", "im_v"};
    for (std::size_t i = 0; i < s.size(); ++i) {
        t.rows.push_back({format_exact(s.freqs[i]), format_exact(s.values[i].real()),
                          format_exact(s.values[i].imag())});
    }
    return t;
}

ComplexSweep sweep_from_table(const CsvTable& t) {
    ComplexSweep s;
    const auto dir = t.meta_value("direction").value_or("up");
    if (dir != "up" && dir != "down") {
        throw FormatError("sweep: direction must be up or down, got '" + dir + "'");
    }
    s.direction = dir == "up" ? SweepDirection::up : SweepDirection::down;
    s.resonance_covered = t.meta_value("resonance_covered").value_or("true") != "false";
    const auto cf = t.column("freq_hz");
    const auto cr = t.column("re_v");
    const auto ci = t.column("im_v");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        s.freqs.push_back(t.number(r, cf));
        s.values.emplace_back(t.number(r, cr), t.number(r, ci));
    }
    return s;
}

CsvTable mask_table(const mfft::InterferenceMask& m) {
    CsvTable t;
    t.set_meta("kind", "interference_mask");
    t.set_meta("bin_width_used", format_exact(m.bin_width_used));
    t.set_meta("flag_fraction_threshold", format_exact(m.flag_fraction_threshold));
    t.set_meta("n_spectra_used", std::to_string(m.n_spectra_used));
    t.columns = {"freq_hz"};
    for (double f : m.masked_frequencies) {
        t.rows.push_back({format_exact(f)});
    }
    return t;
}

mfft::InterferenceMask mask_from_table(const CsvTable& t) {
    mfft::InterferenceMask m;
    if (auto v = t.meta_value("bin_width_used")) {
        m.bin_width_used = parse_double(*v, "bin_width_used");
    }
    if (auto v = t.meta_value("flag_fraction_threshold")) {
        m.flag_fraction_threshold = parse_double(*v, "flag_fraction_threshold");
    }
    if (auto v = t.meta_value("n_spectra_used")) {
        m.n_spectra_used = static_cast<std::size_t>(parse_integer(*v, "n_spectra_used"));
    }
    const auto c = t.column("freq_hz");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        m.masked_frequencies.push_back(t.number(r, c));
    }
    for (std::size_t i = 1; i < m.masked_frequencies.size(); ++i) {
        if (!(m.masked_frequencies[i] > m.masked_frequencies[i - 1])) {
            throw FormatError("mask: frequencies must be sorted and unique");
        }
    }
    return m;
}

CsvTable runs_table(const std::vector<analysis::RunRecord>& runs) {
    CsvTable t;
    t.set_meta("kind", "runs");
    t.columns = {"run", "t_mfft_k", "sigma_mfft_k", "t_cant_k", "sigma_cant_k"};
    auto opt = [](double v) { return std::isnan(v) ? std::string("NA") : format_exact(v); };
    for (const auto& run : runs) {
        if (run.label.find_first_of(",\n\r#") != std::string::npos || trim(run.label).empty() ||
            trim(run.label) != run.label) {
            throw FormatError("runs: run label '" + run.label + "' cannot be stored in CSV");
        }
        for (const auto& p : run.points) {
            t.rows.push_back({run.label, format_exact(p.t_mfft), opt(p.sigma_mfft),
                              format_exact(p.t_cant), opt(p.sigma_cant)});
        }
    }
    return t;
}

std::vector<analysis::RunRecord> runs_from_table(const CsvTable& t) {
    const auto c_run = t.column("run");
    const auto c_tm = t.column("t_mfft_k");
    const auto c_sm = t.column("sigma_mfft_k");
    const auto c_tc = t.column("t_cant_k");
    const auto c_sc = t.column("sigma_cant_k");
    std::vector<analysis::RunRecord> runs;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& label = t.rows[r][c_run];
        auto it = index.find(label);
        if (it == index.end()) {
            it = index.emplace(label, runs.size()).first;
            runs.push_back({});
            runs.back().label = label;
        }
        analysis::RunPoint p;
        p.t_mfft = t.number(r, c_tm);
        p.sigma_mfft = t.number(r, c_sm, true);
        p.t_cant = t.number(r, c_tc);
        p.sigma_cant = t.number(r, c_sc, true);
        runs[it->second].points.push_back(p);
    }
    return runs;
}

CsvTable energy_table(const lockin::EnergyTrace& tr) {
    CsvTable t;
    t.set_meta("kind", "energy_trace");
    t.set_meta("sample_rate", format_exact(tr.sample_rate));
    t.set_meta("demod_freq", format_exact(tr.demod_freq));
    t.set_meta("background_power_v2", format_exact(tr.background_power));
    t.set_meta("background_energy_j", format_exact(tr.background_energy));
    t.set_meta("floored_count", std::to_string(tr.floored_count));
    t.set_meta("stiffness_n_per_m", format_exact(tr.stiffness));
    t.set_meta("kappa_v_per_m", format_exact(tr.kappa.volts_per_meter()));
    t.set_meta("f0", format_exact(tr.resonator.f0));
    t.set_meta("q_factor", format_exact(tr.resonator.q_factor));
    t.columns = {"time_s", "energy_j", "raw_energy_j", "floored"};
    for (std::size_t i = 0; i < tr.energies.size(); ++i) {
        t.rows.push_back({format_exact(tr.times[i]), format_exact(tr.energies[i]),
                          format_exact(tr.raw_energies[i]), tr.raw_energies[i] < 0.0 ? "1" : "0"});
    }
    return t;
}

lockin::EnergyTrace energy_from_table(const CsvTable& t) {
    lockin::EnergyTrace tr;
    tr.sample_rate = parse_double(t.require_meta("sample_rate"), "sample_rate");
    tr.demod_freq = parse_double(t.require_meta("demod_freq"), "demod_freq");
    tr.background_power = parse_double(t.require_meta("background_power_v2"), "background_power_v2");
    tr.background_energy = parse_double(t.require_meta("background_energy_j"), "background_energy_j");
    tr.floored_count = static_cast<std::size_t>(parse_integer(t.require_meta("floored_count"), "floored_count"));
    tr.stiffness = parse_double(t.require_meta("stiffness_n_per_m"), "stiffness_n_per_m");
    tr.kappa = physmodel::DisplacementConversion::from_volts_per_meter(
        parse_double(t.require_meta("kappa_v_per_m"), "kappa_v_per_m"));
    tr.resonator.f0 = parse_double(t.require_meta("f0"), "f0");
    tr.resonator.q_factor = parse_double(t.require_meta("q_factor"), "q_factor");
    tr.resonator.k_spring = tr.stiffness;
    const auto ct = t.column("time_s");
    const auto ce = t.column("energy_j");
    const auto cr = t.column("raw_energy_j");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        tr.times.push_back(t.number(r, ct));
        tr.energies.push_back(t.number(r, ce));
        tr.raw_energies.push_back(t.number(r, cr));
    }
    return tr;
}

CsvTable histogram_table(const thermo::EnergyHistogram& h, const thermo::BandCheck& check) {
    CsvTable t;
    t.set_meta("kind", "energy_histogram");
    t.set_meta("total_samples", std::to_string(h.total_samples));
    t.set_meta("lockin_rate", format_exact(h.lockin_rate));
    t.set_meta("tau_s", format_exact(h.tau));
    t.set_meta("significance_threshold",
               std::to_string(thermo::significance_threshold(h.tau, h.lockin_rate)));
    t.set_meta("fraction_within_2dn", format_exact(check.fraction_within_2));
    t.set_meta("fraction_within_1dn", format_exact(check.fraction_within_1));
    t.columns = {"bin_low_j", "bin_high_j", "count", "expected", "delta_n", "significant",
                 "within_1dn", "within_2dn"};
    for (std::size_t i = 0; i < h.size(); ++i) {
        const auto& b = check.bins.at(i);
        const double dev = std::abs(b.observed - b.expected);
        t.rows.push_back({format_exact(h.bin_edges[i]), format_exact(h.bin_edges[i + 1]),
                          std::to_string(h.counts[i]), format_exact(b.expected),
                          format_exact(b.delta_n), b.significant ? "1" : "0",
                          dev <= b.delta_n ? "1" : "0", dev <= 2.0 * b.delta_n ? "1" : "0"});
    }
    return t;
}

}  // namespace cryotherm::io
