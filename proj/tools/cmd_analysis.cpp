// dispcal, fit and report subcommands.

#include "cli_common.hpp"

#include "cryotherm/analysis.hpp"
#include "cryotherm/constants.hpp"
#include "cryotherm/dispcal.hpp"
#include "cryotherm/errors.hpp"
#include "cryotherm/io/config.hpp"
#include "cryotherm/io/csv.hpp"
#include "cryotherm/io/svg.hpp"
#include "cryotherm/io/text.hpp"

#include <cmath>
#include <memory>

namespace cryotherm::cli {

namespace {

std::string sweep_svg(const ComplexSweep& sweep, const dispcal::SweepAnalysis& an) {
    io::SvgPlot plot("Calibration sweep, complex plane", "Re V (V)", "Im V (V)");
    plot.set_equal_aspect(true);
    std::vector<double> re, im;
    for (const auto& z : sweep.values) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    plot.add_points(re, im, {"#1f77b4", 1.0, false, 1.0}, "sweep-points", "sweep");
    std::vector<double> cx, cy;
    for (int i = 0; i <= 256; ++i) {
        const double a = constants::two_pi * i / 256.0;
        cx.push_back(an.circle.center.real() + an.circle.radius * std::cos(a));
        cy.push_back(an.circle.center.imag() + an.circle.radius * std::sin(a));
    }
    plot.add_line(cx, cy, {"#d62728", 1.0, false, 1.0}, "circle-fit", "fitted circle");
    plot.add_arrow(0.0, 0.0, an.crosstalk_vector.real(), an.crosstalk_vector.imag(),
                   {"#2ca02c", 1.5, false, 1.0}, "crosstalk-vector", "crosstalk");
    if (an.v_drive > 0.0) {
        const auto tip = an.crosstalk_vector + std::polar(an.v_drive, an.phase.theta0);
        plot.add_arrow(an.crosstalk_vector.real(), an.crosstalk_vector.imag(), tip.real(),
                       tip.imag(), {"#9467bd", 1.5, false, 1.0}, "drive-vector", "drive");
    }
    return plot.render();
}

std::string power_svg(const ComplexSweep& sweep, const dispcal::SweepAnalysis& an) {
    io::SvgPlot plot("Response power relative to the crosstalk", "frequency (Hz)",
                     "|V - V_ct|^2 (V^2)");
    std::vector<double> f, p, fit;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        f.push_back(sweep.freqs[i]);
        p.push_back(std::norm(sweep.values[i] - an.crosstalk_vector));
        fit.push_back(an.lorentzian.evaluate(sweep.freqs[i]));
    }
    plot.add_points(f, p, {"#1f77b4", 1.0, false, 1.0}, "power-points", "data");
    if (an.lorentzian.converged) {
        plot.add_line(f, fit, {"#d62728", 1.5, false, 1.0}, "lorentzian-fit", "Lorentzian");
    }
    return plot.render();
}

std::string analysis_text(const dispcal::SweepAnalysis& an) {
    io::KeyValueWriter w;
    w.comment("displacement calibration");
    w.put_bool("response_detected", an.response_detected);
    w.put("circle_center_re_v", an.circle.center.real());
    w.put("circle_center_im_v", an.circle.center.imag());
    w.put("circle_radius_v", an.circle.radius);
    w.put("circle_rms_residual_v", an.circle.rms_residual);
    w.put("noise_sigma_v", an.noise_sigma);
    w.put("phase_theta0_rad", an.phase.theta0);
    w.put("phase_f0_hz", an.phase.f0);
    w.put("phase_half_width_hz", an.phase.half_width);
    w.put("crosstalk_re_v", an.crosstalk_vector.real());
    w.put("crosstalk_im_v", an.crosstalk_vector.imag());
    w.put("v_crosstalk_v", an.v_crosstalk);
    w.put("v_crosstalk_error_v", an.v_crosstalk_error);
    w.put("crosstalk_phase_rad", an.crosstalk_phase);
    w.put("v_drive_v", an.v_drive);
    w.put("v_drive_error_v", an.v_drive_error);
    w.put("lorentzian_center_hz", an.lorentzian.center);
    w.put("lorentzian_width_hz", an.lorentzian.width);
    w.put_bool("lorentzian_consistent", an.lorentzian_consistent);
    w.put("q_fit", an.q_fit);
    w.put("q_fit_error", an.q_fit_error);
    w.put("ratio", an.ratio);
    w.put("ratio_error", an.ratio_error);
    w.put("q_beta_squared", an.q_beta_sq);
    w.put("q_beta_squared_error", an.q_beta_sq_error);
    w.put("beta", an.beta);
    w.put("beta_error", an.beta_error);
    w.put("l_tot_h", an.l_tot);
    w.put("dphi_dx_wb_per_m", an.dphi_dx);
    w.put("dphi_dx_error_wb_per_m", an.dphi_dx_error);
    w.put("dphi_dx_phi0_per_m", an.dphi_dx / constants::flux_quantum);
    w.put("kappa_v_per_m", an.kappa.volts_per_meter());
    w.put("kappa_m_per_v", an.kappa.meters_per_volt());
    w.put("kappa_error_v_per_m", an.kappa_error);
    w.put_bool("electrostatic_suspect", an.electrostatic_suspect);
    for (std::size_t i = 0; i < an.warnings.size(); ++i) {
        w.put("warning." + std::to_string(i), an.warnings[i]);
    }
    return w.str();
}

struct DispcalArgs {
    std::string sweep;
    std::string config;
    std::string grounded;
    std::string down;
    std::string out;
};

void run_dispcal(const DispcalArgs& a) {
    RunOutput run("dispcal", a.out);
    const auto kv = run.load_config(a.config);
    const auto res = io::load_resonator(kv);
    const auto circ = io::load_circuit(kv);
    const auto opts = io::load_dispcal_options(kv);
    kv.reject_unknown();
    if (!circ) {
        throw ConfigError(kv.source() + ": dispcal needs circuit.* keys");
    }
    const auto sweep = run.read_sweep(a.sweep);
    const auto an = dispcal::analyze_sweep(sweep, res, *circ, opts);
    run.add("analysis.txt", analysis_text(an));
    run.add("sweep.svg", sweep_svg(sweep, an));
    run.add("power.svg", power_svg(sweep, an));

    if (!a.grounded.empty()) {
        const auto g = run.read_sweep(a.grounded);
        const auto rep = dispcal::detect_electrostatic(g, &sweep, opts);
        io::KeyValueWriter w;
        w.comment("grounded-drive sweep");
        w.put_bool("electrostatic_flagged", rep.flagged);
        w.put_bool("response_detected", rep.response_detected);
        w.put("radius_v", rep.radius);
        w.put("offset_re_v", rep.offset.real());
        w.put("offset_im_v", rep.offset.imag());
        w.put("offset_magnitude_v", rep.offset_magnitude);
        w.put("offset_significance", rep.offset_significance);
        w.put("noise_sigma_v", rep.noise_sigma);
        if (rep.rotation) {
            w.put("rotation_rad", *rep.rotation);
        }
        run.add("electrostatic.txt", w.str());
    }
    if (!a.down.empty()) {
        const auto d = run.read_sweep(a.down);
        const auto rep = dispcal::compare_updown(sweep, d);
        io::KeyValueWriter w;
        w.comment("up/down sweep comparison");
        w.put("metric", rep.metric);
        w.put("expected_metric", rep.expected_metric);
        w.put_bool("hysteresis_flagged", rep.flagged);
        w.put_uint("n_pairs", rep.n_pairs);
        run.add("hysteresis.txt", w.str());
    }
    run.finish();
}

std::vector<analysis::RunRecord> load_runs(RunOutput& run, const std::string& path,
                                           const std::string& only) {
    auto runs = io::runs_from_table(io::parse_csv(run.read_input(path), path));
    if (!only.empty()) {
        std::vector<analysis::RunRecord> kept;
        for (auto& r : runs) {
            if (r.label == only) {
                kept.push_back(std::move(r));
            }
        }
        if (kept.empty()) {
            throw DataError(path + ": no run labelled '" + only + "'");
        }
        runs = std::move(kept);
    }
    return runs;
}

struct FitArgs {
    std::string runs;
    std::string run_label;
    std::string out;
    double min_tmfft = 0.008;
    bool fix_n = false;
    double n_initial = 2.0;
    double scale = 1.0;
};

void run_fit(const FitArgs& a) {
    RunOutput run("fit", a.out);
    const auto runs = load_runs(run, a.runs, a.run_label);
    run.param("min_tmfft", io::format_exact(a.min_tmfft));
    run.param("fix_n", a.fix_n ? "true" : "false");
    run.param("n_initial", io::format_exact(a.n_initial));
    run.param("scale", io::format_exact(a.scale));
    analysis::SaturationOptions sopts;
    sopts.fix_n = a.fix_n;
    sopts.n_initial = a.n_initial;
    sopts.scale = a.scale;

    io::KeyValueWriter w;
    w.comment("model fits");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        const std::string key = "run." + std::to_string(i) + ".";
        w.blank();
        w.put(key + "label", r.label);
        w.put_uint(key + "n_points", r.points.size());
        std::size_t n_warn = 0;
        try {
            const auto p = analysis::fit_proportionality(r, a.min_tmfft);
            w.put(key + "c", p.c);
            w.put(key + "c_error", p.c_error);
            w.put(key + "c_points", static_cast<std::int64_t>(p.n_points));
            w.put(key + "c_reduced_chi2", p.reduced_chi2);
        } catch (const DataError& e) {
            w.put(key + "warning." + std::to_string(n_warn++), e.what());
        }
        try {
            const auto s = analysis::fit_saturation(r, sopts);
            w.put(key + "t0_k", s.t0);
            w.put(key + "t0_error_k", s.t0_error);
            w.put(key + "n", s.n);
            w.put(key + "n_error", s.n_error);
            w.put(key + "saturation_reduced_chi2", s.reduced_chi2);
            w.put_bool(key + "saturation_converged", s.converged);
            w.put_bool(key + "saturation_identifiable", s.identifiable);
            w.put(key + "saturation_domain", s.domain_note);
        } catch (const DataError& e) {
            w.put(key + "warning." + std::to_string(n_warn++), e.what());
        }
    }
    run.add("fits.txt", w.str());
    run.finish();
}

struct ReportArgs {
    std::string runs;
    std::string out;
    double min_tmfft = 0.008;
};

void run_report_cmd(const ReportArgs& a) {
    RunOutput run("report", a.out);
    const auto runs = load_runs(run, a.runs, "");
    run.param("min_tmfft", io::format_exact(a.min_tmfft));
    auto rep = analysis::run_report(runs, a.min_tmfft);
    for (auto& f : rep.files) {
        run.add(f.name, std::move(f.content));
    }
    run.finish();
}

}  // namespace

void add_dispcal(CLI::App& app) {
    auto a = std::make_shared<DispcalArgs>();
    auto* sub = app.add_subcommand("dispcal", "Displacement calibration from a driven sweep");
    sub->add_option("-s,--sweep", a->sweep, "Sweep CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("-c,--config", a->config, "Configuration file (resonator, circuit, dispcal)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--grounded", a->grounded, "Sweep taken with the drive coil grounded")
        ->check(CLI::ExistingFile);
    sub->add_option("--down", a->down, "Down sweep paired with --sweep for hysteresis")
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_dispcal(*a); });
}

void add_fit(CLI::App& app) {
    auto a = std::make_shared<FitArgs>();
    auto* sub = app.add_subcommand("fit", "Proportionality and saturation fits of run data");
    sub->add_option("-r,--runs", a->runs, "Runs CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--run", a->run_label, "Fit only this run label");
    sub->add_option("--min-tmfft", a->min_tmfft, "Lower T_MFFT cutoff for the c fit (K)");
    sub->add_flag("--fix-n", a->fix_n, "Keep the saturation exponent fixed");
    sub->add_option("--n-initial", a->n_initial, "Initial (or fixed) saturation exponent");
    sub->add_option("--scale", a->scale, "Scale factor c in the saturation model");
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_fit(*a); });
}

void add_report(CLI::App& app) {
    auto a = std::make_shared<ReportArgs>();
    auto* sub = app.add_subcommand("report", "Comparison report over all runs");
    sub->add_option("-r,--runs", a->runs, "Runs CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--min-tmfft", a->min_tmfft, "Lower T_MFFT cutoff for the c fit (K)");
    sub->add_option("-o,--out", a->out, "Output directory");
    sub->callback([a] { run_report_cmd(*a); });
}

}  // namespace cryotherm::cli
