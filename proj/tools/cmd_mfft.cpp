// mfft-calibrate and mfft-temp subcommands.

#include "cli_common.hpp"

#include "cryotherm/errors.hpp"
#include "cryotherm/io/config.hpp"
#include "cryotherm/io/csv.hpp"
#include "cryotherm/io/svg.hpp"
#include "cryotherm/io/text.hpp"
#include "cryotherm/mfft.hpp"

#include <filesystem>
#include <memory>

namespace cryotherm::cli {

namespace {

struct CalibrateArgs {
    std::vector<std::string> spectra;
    std::vector<std::string> mask_spectra;
    std::string config;
    std::string out;
};

void run_calibrate(const CalibrateArgs& a) {
    RunOutput run("mfft-calibrate", a.out);
    std::optional<io::KeyValueReader> kv;
    if (!a.config.empty()) {
        kv = run.load_config(a.config);
    }
    const auto kv_or_empty = kv ? *kv : io::KeyValueReader::parse("", "defaults");
    const auto mask_opts = io::load_mask_options(kv_or_empty);
    const auto cal_opts = io::load_calibration_options(kv_or_empty);
    kv_or_empty.reject_unknown();

    const auto files = expand_csv_inputs(a.spectra);
    std::vector<std::pair<Spectrum, double>> refs;
    std::vector<Spectrum> training;
    for (const auto& f : files) {
        double t = 0.0;
        auto s = run.read_spectrum(f, &t);
        refs.emplace_back(s, t);
        if (a.mask_spectra.empty()) {
            training.push_back(std::move(s));
        }
    }
    for (const auto& f : a.mask_spectra.empty() ? std::vector<std::string>{}
                                                 : expand_csv_inputs(a.mask_spectra)) {
        training.push_back(run.read_spectrum(f));
    }
    const auto mask = mfft::build_mask(training, mask_opts);
    const auto cal = mfft::calibrate(refs, mask, cal_opts);

    io::CsvTable power;
    power.set_meta("kind", "mfft_band_power");
    power.set_meta("band_low_hz", io::format_exact(cal.band.first));
    power.set_meta("band_high_hz", io::format_exact(cal.band.second));
    power.columns = {"file", "reference_k", "band_power", "in_fit"};
    std::vector<double> tx, py, tfit, pfit;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const double p = mfft::spectral_noise_power(refs[i].first, cal.band, mask);
        const double t = refs[i].second;
        const bool used = t >= cal.reference_range.first && t <= cal.reference_range.second;
        power.rows.push_back({std::filesystem::path(files[i]).filename().string(),
                              io::format_exact(t), io::format_exact(p), used ? "true" : "false"});
        (used ? tfit : tx).push_back(t * 1e3);
        (used ? pfit : py).push_back(p);
    }
    io::SvgPlot plot("MFFT calibration", "reference temperature (mK)", "band noise power");
    if (!tx.empty()) {
        plot.add_points(tx, py, {"#7f7f7f", 1.0, false, 0.6}, "excluded", "outside reference range");
    }
    plot.add_points(tfit, pfit, {"#1f77b4", 1.0, false, 1.0}, "reference", "reference points");
    double tmax = 0.0;
    for (const auto& r : refs) {
        tmax = std::max(tmax, r.second);
    }
    plot.add_line({0.0, tmax * 1e3}, {cal.intercept, cal.intercept + cal.slope * tmax},
                  {"#d62728", 1.5, false, 1.0}, "calibration-line",
                  "slope " + io::format_short(cal.slope) + " per K");

    run.add("mask.csv", io::to_csv(io::mask_table(mask)));
    run.add("calibration.txt", io::calibration_to_text(cal, "mask.csv"));
    run.add("band_power.csv", io::to_csv(power));
    run.add("calibration.svg", plot.render());
    run.finish();
}

struct TempArgs {
    std::vector<std::string> spectra;
    std::string calibration;
    std::string out;
};

void run_mfft_temp(const TempArgs& a) {
    RunOutput run("mfft-temp", a.out);
    const auto kv = run.load_config(a.calibration);
    const auto mask_path = std::filesystem::path(a.calibration).parent_path() /
                           kv.get_string("mask_file");
    const auto mask = io::mask_from_table(io::parse_csv(run.read_input(mask_path.string()),
                                                        mask_path.string()));
    const auto cal = io::calibration_from_text(kv, mask);
    kv.reject_unknown();

    const auto files = expand_csv_inputs(a.spectra);
    std::vector<Spectrum> spectra;
    io::CsvTable out;
    out.set_meta("kind", "mfft_temperatures");
    out.columns = {"file", "band_power", "temperature_k", "flagged", "reference_k"};
    std::vector<double> refs;
    for (const auto& f : files) {
        const auto table = io::parse_csv(run.read_input(f), f);
        spectra.push_back(io::spectrum_from_table(table));
        const auto t = mfft::temperature(spectra.back(), cal);
        const auto ref = table.meta_value("temperature_k");
        if (ref) {
            refs.push_back(io::parse_double(*ref, f + " temperature_k"));
        }
        out.rows.push_back({std::filesystem::path(f).filename().string(), io::format_exact(t.power),
                            io::format_exact(t.value), t.flagged ? "true" : "false",
                            ref ? *ref : "NA"});
    }
    run.add("temperatures.csv", io::to_csv(out));

    io::KeyValueWriter w;
    w.comment("MFFT temperature");
    w.put_uint("n_spectra", spectra.size());
    if (spectra.size() >= 30) {
        const auto iv = mfft::interval_uncertainty(spectra, cal);
        w.put("temperature_k", iv.mean);
        w.put("two_sigma_k", iv.two_sigma);
        w.put_bool("gaussian_fit_good", iv.good_fit);
    } else {
        double sum = 0.0;
        for (const auto& s : spectra) {
            sum += mfft::temperature(s, cal).value;
        }
        w.put("temperature_k", sum / static_cast<double>(spectra.size()));
        w.put("two_sigma_k", "NA");
        w.put("note", "fewer than 30 spectra; no interval estimate");
    }
    if (refs.size() == spectra.size()) {
        double sum = 0.0;
        for (double r : refs) {
            sum += r;
        }
        w.put("reference_mean_k", sum / static_cast<double>(refs.size()));
    }
    run.add("summary.txt", w.str());
    run.finish();
}

}  // namespace

void add_mfft_calibrate(CLI::App& app) {
    auto a = std::make_shared<CalibrateArgs>();
    auto* sub = app.add_subcommand("mfft-calibrate",
                                   "Interference mask and power-temperature calibration");
    sub->add_option("-s,--spectra", a->spectra,
                    "Reference spectra (CSV files with temperature_k metadata, or directories)")
        ->required();
    sub->add_option("--mask-spectra", a->mask_spectra,
                    "Spectra used to build the mask (default: the reference spectra)");
    sub->add_option("-c,--config", a->config, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_calibrate(*a); });
}

void add_mfft_temp(CLI::App& app) {
    auto a = std::make_shared<TempArgs>();
    auto* sub = app.add_subcommand("mfft-temp", "Temperatures from spectra with a calibration");
    sub->add_option("-s,--spectra", a->spectra, "Spectra (CSV files or directories)")->required();
    sub->add_option("--calibration", a->calibration, "calibration.txt from mfft-calibrate")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_mfft_temp(*a); });
}

}  // namespace cryotherm::cli
