// simulate, psd, lockin and temp subcommands.

#include "cli_common.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/dsp/fit.hpp"
#include "cryotherm/dsp/welch.hpp"
#include "cryotherm/errors.hpp"
#include "cryotherm/io/config.hpp"
#include "cryotherm/io/csv.hpp"
#include "cryotherm/io/rawseries.hpp"
#include "cryotherm/io/svg.hpp"
#include "cryotherm/io/text.hpp"
#include "cryotherm/lockin.hpp"
#include "cryotherm/simkit.hpp"
#include "cryotherm/thermo.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>

namespace cryotherm::cli {

namespace {

std::size_t largest_pow2_at_most(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) {
        p *= 2;
    }
    return p;
}

Spectrum crop(const Spectrum& s, double lo, double hi) {
    Spectrum out = s;
    out.freqs.clear();
    out.values.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.freqs[i] >= lo && s.freqs[i] <= hi) {
            out.freqs.push_back(s.freqs[i]);
            out.values.push_back(s.values[i]);
        }
    }
    return out;
}

std::string psd_svg(const Spectrum& s, const std::optional<dsp::LorentzianFit>& fit,
                    const std::string& title) {
    io::SvgPlot plot(title, "frequency (Hz)", "PSD (" + s.unit + ")");
    plot.set_log_y(true);
    std::vector<double> f, v;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.values[i] > 0.0) {
            f.push_back(s.freqs[i]);
            v.push_back(s.values[i]);
        }
    }
    plot.add_line(f, v, {"#1f77b4", 1.0, false, 1.0}, "psd", "Welch PSD");
    if (fit && fit->converged) {
        std::vector<double> fv;
        for (double x : f) {
            fv.push_back(fit->evaluate(x));
        }
        plot.add_line(f, fv, {"#d62728", 1.5, true, 1.0}, "lorentzian-fit", "Lorentzian fit");
    }
    return plot.render();
}

std::string lorentzian_text(const dsp::LorentzianFit& fit) {
    io::KeyValueWriter w;
    w.put("center_hz", fit.center);
    w.put("center_error_hz", fit.center_error);
    w.put("width_hz", fit.width);
    w.put("width_error_hz", fit.width_error);
    w.put("q_factor", fit.width > 0.0 ? fit.center / fit.width : 0.0);
    w.put("amplitude", fit.amplitude);
    w.put("offset", fit.offset);
    w.put("peak_area", fit.area());
    w.put("reduced_chi2", fit.reduced_chi2);
    w.put_bool("converged", fit.converged);
    return w.str();
}

std::string histogram_svg(const thermo::EnergyHistogram& h, const thermo::BandCheck& check,
                          const thermo::TemperatureEstimate& t) {
    io::SvgPlot plot("Energy histogram", "energy (J)", "counts");
    plot.set_log_y(true);
    std::vector<double> x, y, ye, ex, lo, hi, xs;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const auto& b = check.bins[i];
        if (b.observed > 0.0) {
            x.push_back(b.center);
            y.push_back(b.observed);
        }
        if (b.expected > 0.0) {
            xs.push_back(b.center);
            ex.push_back(b.expected);
            lo.push_back(std::max(b.expected - 2.0 * b.delta_n, b.expected * 1e-3));
            hi.push_back(b.expected + 2.0 * b.delta_n);
        }
    }
    if (!xs.empty()) {
        plot.add_band(xs, lo, hi, {"#ff7f0e", 0.0, false, 0.25}, "band-2dn", "expected +/- 2 dn");
        plot.add_line(xs, ex, {"#ff7f0e", 1.5, false, 1.0}, "boltzmann",
                      "Boltzmann, T = " + io::format_short(t.value * 1e3) + " mK");
    }
    plot.add_points(x, y, {"#1f77b4", 1.0, false, 1.0}, "counts", "observed");
    return plot.render();
}

std::string estimate_keys(const std::string& prefix, const thermo::TemperatureEstimate& t) {
    io::KeyValueWriter w;
    w.put(prefix + "_k", t.value);
    w.put(prefix + "_error_k", t.statistical_uncertainty);
    w.put_bool(prefix + "_flagged", t.flagged);
    if (!t.note.empty()) {
        w.put(prefix + "_note", t.note);
    }
    return w.str();
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string out;
};

void run_simulate(const SimulateArgs& a) {
    RunOutput run("simulate", a.out);
    const auto kv = run.load_config(a.config);
    const auto kind = kv.get_string("simulate.kind", "thermal");
    run.param("kind", kind);
    if (kind == "thermal") {
        const auto cfg = io::load_sim(kv);
        kv.reject_unknown();
        run.add("series.mkts", io::encode_raw_series(sim::simulate_thermal_trace(cfg)));
    } else if (kind == "sweep") {
        const auto res = io::load_resonator(kv);
        const auto cfg = io::load_sweep(kv);
        kv.reject_unknown();
        run.add("sweep.csv", io::to_csv(io::sweep_table(sim::simulate_sweep(res, cfg))));
    } else if (kind == "mfft") {
        const auto plan = io::load_mfft_sim(kv);
        kv.reject_unknown();
        const auto spectra = sim::simulate_mfft_spectra(plan.config, plan.temperatures);
        for (std::size_t i = 0; i < spectra.size(); ++i) {
            auto table = io::spectrum_table(spectra[i]);
            table.set_meta("temperature_k", io::format_exact(plan.temperatures[i]));
            char name[40];
            std::snprintf(name, sizeof name, "spectra/spectrum_%05zu.csv", i);
            run.add(name, io::to_csv(table));
        }
    } else {
        throw ConfigError(kv.source() + ": simulate.kind must be thermal, sweep or mfft, got '" +
                          kind + "'");
    }
    run.finish();
}

struct PsdArgs {
    std::string series;
    std::string out;
    std::size_t segment = 0;
    std::vector<double> fit_window;
};

void run_psd(const PsdArgs& a) {
    RunOutput run("psd", a.out);
    const auto ts = run.read_series(a.series);
    const std::size_t seg = a.segment != 0 ? a.segment : largest_pow2_at_most(ts.samples.size() / 8);
    run.param("segment_length", std::to_string(seg));
    const auto s = dsp::welch_psd(ts, seg);
    std::optional<dsp::LorentzianFit> fit;
    if (!a.fit_window.empty()) {
        if (a.fit_window.size() != 2 || !(a.fit_window[0] < a.fit_window[1])) {
            throw UsageError("--fit-window needs two increasing frequencies");
        }
        fit = dsp::fit_lorentzian(s, {a.fit_window[0], a.fit_window[1]});
        run.add("lorentzian.txt", lorentzian_text(*fit));
    }
    run.add("psd.csv", io::to_csv(io::spectrum_table(s)));
    run.add("psd.svg", psd_svg(s, fit, "Power spectral density"));
    run.finish();
}

struct LockinArgs {
    std::string series;
    std::string config;
    std::string out;
};

void run_lockin(const LockinArgs& a) {
    RunOutput run("lockin", a.out);
    const auto kv = run.load_config(a.config);
    std::optional<physmodel::ResonatorParams> res;
    if (kv.has("resonator.f0")) {
        res = io::load_resonator(kv);
    }
    const auto cfg = io::load_lockin(kv, res ? res->f0 : 0.0);
    const auto kappa = kv.get_optional_double("readout.kappa");
    kv.reject_unknown();
    const auto ts = run.read_series(a.series);

    const auto z = lockin::demodulate(ts, cfg);
    io::CsvTable env;
    env.set_meta("kind", "lockin_envelope");
    env.set_meta("demod_freq", io::format_exact(cfg.demod_freq));
    env.set_meta("bandwidth", io::format_exact(cfg.bandwidth));
    env.set_meta("sample_rate", io::format_exact(z.sample_rate));
    env.columns = {"time_s", "re_v", "im_v"};
    for (std::size_t i = 0; i < z.samples.size(); ++i) {
        env.rows.push_back({io::format_exact(z.time_at(i)), io::format_exact(z.samples[i].real()),
                            io::format_exact(z.samples[i].imag())});
    }
    run.add("envelope.csv", io::to_csv(env));
    if (res && kappa) {
        const auto trace = lockin::energy_trace(
            ts, cfg, *res, physmodel::DisplacementConversion::from_volts_per_meter(*kappa));
        run.add("energy.csv", io::to_csv(io::energy_table(trace)));
    }
    run.finish();
}

struct TempArgs {
    std::string series;
    std::string config;
    std::string out;
};

void run_temp(const TempArgs& a) {
    RunOutput run("temp", a.out);
    const auto kv = run.load_config(a.config);
    const auto res = io::load_resonator(kv);
    const auto cfg = io::load_lockin(kv, res.f0);
    const double kappa = kv.get_double("readout.kappa");
    const auto n_bins = static_cast<std::size_t>(kv.get_uint("thermo.bins", 0));
    auto seg = static_cast<std::size_t>(kv.get_uint("psd.segment_length", 0));
    kv.reject_unknown();
    if (!(kappa > 0.0)) {
        throw ConfigError(kv.source() + ": readout.kappa must be positive");
    }
    const auto ts = run.read_series(a.series);
    std::vector<std::string> warnings;

    // Spectrum around the resonance with a few bins per linewidth.
    const double linewidth = res.f0 / res.q_factor;
    if (seg == 0) {
        const double target = ts.sample_rate / (linewidth / 8.0);
        seg = 2;
        while (static_cast<double>(seg) < target) {
            seg *= 2;
        }
        seg = std::min(seg, largest_pow2_at_most(ts.samples.size() / 2));
    }
    run.param("psd_segment_length", std::to_string(seg));
    const auto psd = dsp::welch_psd(ts, seg);
    const double df = psd.bin_width();
    const double half = std::max(10.0 * linewidth, 20.0 * df);
    std::optional<dsp::LorentzianFit> fit;
    try {
        fit = dsp::fit_lorentzian(psd, {res.f0 - half, res.f0 + half});
        if (!fit->converged) {
            warnings.push_back("Lorentzian fit of the PSD did not converge");
        } else if (std::abs(fit->center - cfg.demod_freq) > cfg.bandwidth) {
            warnings.push_back("fitted resonance " + io::format_short(fit->center) +
                               " Hz deviates from the lock-in frequency " +
                               io::format_short(cfg.demod_freq) + " Hz by more than the bandwidth");
        }
    } catch (const DataError& e) {
        warnings.push_back(std::string("no Lorentzian fit: ") + e.what());
    }
    const auto shown = crop(psd, res.f0 - 5.0 * half, res.f0 + 5.0 * half);
    run.add("psd.csv", io::to_csv(io::spectrum_table(shown)));
    run.add("psd.svg", psd_svg(shown, fit, "PSD near the resonance"));

    const auto trace = lockin::energy_trace(
        ts, cfg, res, physmodel::DisplacementConversion::from_volts_per_meter(kappa));
    run.add("energy.csv", io::to_csv(io::energy_table(trace)));

    const double tau = physmodel::correlation_time(res);
    const auto t_mean = thermo::temperature_from_mean(trace, tau);
    std::optional<thermo::EnergyHistogram> hist;
    std::optional<thermo::TemperatureEstimate> t_slope;
    std::optional<thermo::BandCheck> check;
    try {
        hist = thermo::make_histogram(trace, tau, n_bins);
    } catch (const DataError& e) {
        warnings.push_back(std::string("no histogram: ") + e.what());
    }
    if (hist) {
        try {
            t_slope = thermo::temperature_from_slope(*hist);
        } catch (const DataError& e) {
            warnings.push_back(std::string("no slope temperature: ") + e.what());
        }
        if (!t_mean.flagged) {
            check = thermo::boltzmann_band_check(*hist, t_mean);
            run.add("histogram.csv", io::to_csv(io::histogram_table(*hist, *check)));
            run.add("histogram.svg", histogram_svg(*hist, *check, t_mean));
        } else {
            warnings.push_back("mean temperature not physical; Boltzmann check skipped");
        }
    }

    std::string text = "# cantilever temperature\n";
    {
        io::KeyValueWriter w;
        w.put("duration_s", trace.duration());
        w.put("tau_s", tau);
        w.put_uint("independent_samples", lockin::independent_count(trace, tau));
        w.put("demod_freq_hz", cfg.demod_freq);
        w.put("kappa_v_per_m", kappa);
        w.put("stiffness_n_per_m", trace.stiffness);
        w.put("background_energy_j", trace.background_energy);
        w.put_uint("floored_samples", trace.floored_count);
        if (fit && fit->converged) {
            w.put("fitted_f0_hz", fit->center);
            w.put("fitted_q", fit->width > 0.0 ? fit->center / fit->width : 0.0);
            w.put("psd_peak_area_v2", fit->area());
        }
        text += w.str();
    }
    text += estimate_keys("temperature_mean", t_mean);
    if (t_slope) {
        text += estimate_keys("temperature_slope", *t_slope);
        const double diff = t_slope->value - t_mean.value;
        const double comb = std::hypot(t_slope->statistical_uncertainty,
                                       t_mean.statistical_uncertainty);
        io::KeyValueWriter w;
        w.put_bool("methods_agree_2sigma", std::abs(diff) <= 2.0 * comb);
        text += w.str();
    }
    {
        io::KeyValueWriter w;
        if (hist) {
            w.put_uint("histogram_bins", hist->size());
        }
        if (check) {
            w.put_uint("significant_bins", check->n_significant);
            w.put("fraction_within_2dn", check->fraction_within_2);
            w.put("fraction_within_1dn", check->fraction_within_1);
        }
        for (std::size_t i = 0; i < warnings.size(); ++i) {
            w.put("warning." + std::to_string(i), warnings[i]);
        }
        text += w.str();
    }
    run.add("temperature.txt", text);
    run.finish();
    std::printf("T_mean = %.4g +/- %.2g mK%s\n", t_mean.value * 1e3,
                t_mean.statistical_uncertainty * 1e3, t_mean.flagged ? " (flagged)" : "");
}

}  // namespace

void add_simulate(CLI::App& app) {
    auto a = std::make_shared<SimulateArgs>();
    auto* sub = app.add_subcommand("simulate", "Generate synthetic thermal traces, sweeps or MFFT spectra");
    sub->add_option("-c,--config", a->config, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_simulate(*a); });
}

void add_psd(CLI::App& app) {
    auto a = std::make_shared<PsdArgs>();
    auto* sub = app.add_subcommand("psd", "Welch power spectral density of a series");
    sub->add_option("-s,--series", a->series, "Raw series file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->add_option("--segment", a->segment, "Segment length in samples (even)");
    sub->add_option("--fit-window", a->fit_window, "Lorentzian fit window: low high (Hz)")
        ->expected(2);
    sub->callback([a] { run_psd(*a); });
}

void add_lockin(CLI::App& app) {
    auto a = std::make_shared<LockinArgs>();
    auto* sub = app.add_subcommand("lockin", "Demodulate a series; energy trace when calibrated");
    sub->add_option("-s,--series", a->series, "Raw series file")->required()->check(CLI::ExistingFile);
    sub->add_option("-c,--config", a->config, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_lockin(*a); });
}

void add_temp(CLI::App& app) {
    auto a = std::make_shared<TempArgs>();
    auto* sub = app.add_subcommand("temp", "Cantilever temperature from a raw series");
    sub->add_option("-s,--series", a->series, "Raw series file")->required()->check(CLI::ExistingFile);
    sub->add_option("-c,--config", a->config, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_temp(*a); });
}

}  // namespace cryotherm::cli
