#include "cryotherm/analysis.hpp"

#include "cryotherm/dsp/fit.hpp"
#include "cryotherm/errors.hpp"
#include "cryotherm/io/csv.hpp"
#include "cryotherm/io/svg.hpp"
#include "cryotherm/io/text.hpp"

#include <algorithm>
#include <array>

namespace cryotherm::analysis {

namespace {

bool has(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate(const RunRecord& run) {
    for (std::size_t i = 0; i < run.points.size(); ++i) {
        const auto& p = run.points[i];
        if (!(p.t_mfft > 0.0) || !(p.t_cant > 0.0)) {
            throw DataError("run '" + run.label + "': point " + std::to_string(i) +
                            " has a non-positive temperature");
        }
        if (p.sigma_mfft < 0.0 || p.sigma_cant < 0.0) {
            throw DataError("run '" + run.label + "': point " + std::to_string(i) +
                            " has a negative uncertainty");
        }
    }
}

ProportionalityFit fit_proportionality(const RunRecord& run, double min_tmfft) {
    validate(run);
    std::vector<RunPoint> pts;
    for (const auto& p : run.points) {
        if (p.t_mfft > min_tmfft) {
            pts.push_back(p);
        }
    }
    if (pts.size() < 2) {
        throw DataError("fit_proportionality: run '" + run.label + "' has " +
                        std::to_string(pts.size()) + " points above " +
                        io::format_short(min_tmfft) + " K, need 2");
    }
    const bool any_sigma = std::any_of(pts.begin(), pts.end(), [](const RunPoint& p) {
        return has(p.sigma_cant);
    });

    auto weights_for = [&](double c) {
        std::vector<double> w(pts.size(), 1.0);
        if (!any_sigma) {
            return w;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double var = has(pts[i].sigma_cant) ? pts[i].sigma_cant * pts[i].sigma_cant : 0.0;
            if (has(pts[i].sigma_cant) && has(pts[i].sigma_mfft)) {
                var += c * c * pts[i].sigma_mfft * pts[i].sigma_mfft;
            }
            if (!(var > 0.0)) {
                throw DataError("fit_proportionality: point without cantilever uncertainty");
            }
            w[i] = 1.0 / var;
        }
        return w;
    };

    // Effective variance depends on c; a few fixed-point passes settle it.
    double c = 1.0;
    std::vector<double> w;
    for (int pass = 0; pass < 20; ++pass) {
        w = weights_for(c);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            sxy += w[i] * pts[i].t_mfft * pts[i].t_cant;
            sxx += w[i] * pts[i].t_mfft * pts[i].t_mfft;
        }
        const double next = sxy / sxx;
        const bool done = std::abs(next - c) <= 1e-14 * std::abs(next);
        c = next;
        if (done) {
            break;
        }
    }
    w = weights_for(c);
    ProportionalityFit fit;
    fit.c = c;
    fit.n_points = pts.size();
    double sxx = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = pts[i].t_cant - c * pts[i].t_mfft;
        fit.chi2 += w[i] * r * r;
        sxx += w[i] * pts[i].t_mfft * pts[i].t_mfft;
    }
    fit.reduced_chi2 = fit.chi2 / static_cast<double>(pts.size() - 1);
    // Known error bars fix the scale; unweighted data take it from the residuals.
    fit.c_error = any_sigma ? std::sqrt(1.0 / sxx) : std::sqrt(fit.reduced_chi2 / sxx);
    return fit;
}

double SaturationFit::evaluate(double t_mfft) const {
    // (x^n + t0^n)^(1/n) evaluated as m (1 + (s/m)^n)^(1/n) to avoid overflow.
    const double m = std::max(t_mfft, t0);
    const double s = std::min(t_mfft, t0);
    return c * m * std::pow(1.0 + std::pow(s / m, n), 1.0 / n);
}

SaturationFit fit_saturation(const RunRecord& run, const SaturationOptions& opts) {
    validate(run);
    const auto& pts = run.points;
    if (pts.size() < 4) {
        throw DataError("fit_saturation: need at least 4 points, run '" + run.label + "' has " +
                        std::to_string(pts.size()));
    }
    if (!(opts.scale > 0.0) || !(opts.n_initial > 0.0)) {
        throw ConfigError("fit_saturation: scale and initial n must be positive");
    }
    const bool all_sigma = std::all_of(pts.begin(), pts.end(), [](const RunPoint& p) {
        return has(p.sigma_cant);
    });
    double tscale = 0.0;
    for (const auto& p : pts) {
        tscale = std::max(tscale, p.t_mfft);
    }
    const std::size_t m = pts.size();
    std::vector<double> x(m), y(m), sy(m), sx(m);
    for (std::size_t i = 0; i < m; ++i) {
        x[i] = pts[i].t_mfft / tscale;
        y[i] = pts[i].t_cant / tscale;
        sy[i] = all_sigma ? pts[i].sigma_cant / tscale : 1.0;
        sx[i] = all_sigma && has(pts[i].sigma_mfft) ? pts[i].sigma_mfft / tscale : 0.0;
    }
    const double c = opts.scale;

    // Model in scaled units; returns value and partials in (t0, n).
    auto model = [&](double xi, double t0, double n) {
        const double g = std::pow(xi, n) + std::pow(t0, n);
        const double v = c * std::pow(g, 1.0 / n);
        const double dt0 = c * std::pow(g, 1.0 / n - 1.0) * std::pow(t0, n - 1.0);
        const double dn = v * (-std::log(g) / (n * n) +
                               (std::pow(xi, n) * std::log(xi) + std::pow(t0, n) * std::log(t0)) / (n * g));
        const double dx = c * std::pow(g, 1.0 / n - 1.0) * std::pow(xi, n - 1.0);
        return std::array<double, 4>{v, dt0, dn, dx};
    };

    const bool fix_n = opts.fix_n;
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        const double t0 = p[0];
        const double n = fix_n ? opts.n_initial : p[1];
        for (std::size_t i = 0; i < m; ++i) {
            const auto d = model(x[i], t0, n);
            const double sig = std::sqrt(sy[i] * sy[i] + d[3] * d[3] * sx[i] * sx[i]);
            const auto k = static_cast<Eigen::Index>(i);
            r[k] = (d[0] - y[i]) / sig;
            jac(k, 0) = d[1] / sig;
            if (!fix_n) {
                jac(k, 1) = d[2] / sig;
            }
        }
    };
    double t0_init = std::numeric_limits<double>::infinity();
    for (double v : y) {
        t0_init = std::min(t0_init, v / c);
    }
    Eigen::VectorXd p0(fix_n ? 1 : 2);
    p0[0] = t0_init;
    if (!fix_n) {
        p0[1] = opts.n_initial;
    }
    const auto lm = dsp::levenberg_marquardt(
        residuals, p0, m, {}, [&](const Eigen::VectorXd& p) {
            return p[0] > 0.0 && (fix_n || (p[1] > 0.05 && p[1] < 200.0));
        });

    SaturationFit fit;
    fit.c = c;
    fit.t0 = lm.params[0] * tscale;
    fit.n = fix_n ? opts.n_initial : lm.params[1];
    fit.chi2 = lm.chi2;
    const std::size_t n_par = fix_n ? 1 : 2;
    const double dof = m > n_par ? static_cast<double>(m - n_par) : 1.0;
    fit.reduced_chi2 = lm.chi2 / dof;
    const double s2 = fit.reduced_chi2;
    const double var_t0 = lm.covariance(0, 0);
    const double var_n = fix_n ? 0.0 : lm.covariance(1, 1);
    fit.t0_error = std::sqrt(std::abs(var_t0) * s2) * tscale;
    fit.n_error = std::sqrt(std::abs(var_n) * s2);
    fit.converged = lm.converged && lm.params.allFinite() && lm.covariance.allFinite();

    // Identifiability against the stated uncertainties when available.
    const double id_scale = all_sigma ? std::max(1.0, s2) : s2;
    const double t0_abs = std::sqrt(std::abs(var_t0) * id_scale) * tscale;
    const double n_abs = std::sqrt(std::abs(var_n) * id_scale);
    fit.identifiable = fit.converged && t0_abs < fit.t0 && (fix_n || n_abs < fit.n);

    double xmin = pts.front().t_mfft, xmax = xmin;
    for (const auto& p : pts) {
        xmin = std::min(xmin, p.t_mfft);
        xmax = std::max(xmax, p.t_mfft);
    }
    fit.domain_note = "fitted over T_MFFT in [" + io::format_short(xmin) + ", " +
                      io::format_short(xmax) + "] K with " + std::to_string(m) + " points";
    if (!fit.identifiable) {
        fit.domain_note += "; parameters not constrained by the data";
    }
    return fit;
}

Report run_report(const std::vector<RunRecord>& runs, double min_tmfft) {
    if (runs.empty()) {
        throw DataError("run_report: no runs");
    }
    static const std::array<const char*, 6> colors = {"#1f77b4", "#d62728", "#2ca02c",
                                                      "#9467bd", "#ff7f0e", "#8c564b"};
    Report rep;
    io::SvgPlot plot("Cantilever versus bath temperature", "T_MFFT (mK)", "T_cantilever (mK)");
    double xmax = 0.0;
    for (const auto& run : runs) {
        for (const auto& p : run.points) {
            xmax = std::max({xmax, p.t_mfft, p.t_cant});
        }
    }

    io::CsvTable fits;
    fits.set_meta("kind", "run_fits");
    fits.set_meta("min_tmfft_k", io::format_exact(min_tmfft));
    fits.columns = {"run", "n_points", "c", "c_error", "t0_k", "t0_error_k", "n", "n_error",
                    "saturation_identifiable"};
    std::string summary = "# run report\nn_runs = " + std::to_string(runs.size()) + "\n";
    auto na = [](const std::optional<double>& v) {
        return v ? io::format_exact(*v) : std::string("NA");
    };

    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        validate(run);
        RunSummary rs;
        rs.label = run.label;
        if (run.points.size() < 2) {
            rs.warnings.push_back("fewer than two points; no fits");
        } else {
            try {
                rs.proportionality = fit_proportionality(run, min_tmfft);
            } catch (const DataError& e) {
                rs.warnings.push_back(e.what());
            }
        }
        if (run.points.size() >= 4) {
            try {
                rs.saturation = fit_saturation(run);
                if (!rs.saturation->identifiable) {
                    rs.warnings.push_back("saturation fit not identifiable");
                }
            } catch (const DataError& e) {
                rs.warnings.push_back(e.what());
            }
        }

        const std::string color = colors[r % colors.size()];
        std::vector<double> x, y, xe, ye;
        for (const auto& p : run.points) {
            x.push_back(p.t_mfft * 1e3);
            y.push_back(p.t_cant * 1e3);
            xe.push_back(std::isfinite(p.sigma_mfft) ? p.sigma_mfft * 1e3 : 0.0);
            ye.push_back(std::isfinite(p.sigma_cant) ? p.sigma_cant * 1e3 : 0.0);
        }
        plot.add_points(x, y, {color, 1.0, false, 1.0}, "run-points", "run " + run.label, ye, xe);
        if (rs.proportionality) {
            plot.add_line({0.0, xmax * 1e3}, {0.0, rs.proportionality->c * xmax * 1e3},
                          {color, 1.5, true, 1.0}, "c-line",
                          "c = " + io::format_short(rs.proportionality->c));
        }

        std::optional<double> c, ce, t0, t0e, n, ne;
        if (rs.proportionality) {
            c = rs.proportionality->c;
            ce = rs.proportionality->c_error;
        }
        if (rs.saturation) {
            t0 = rs.saturation->t0;
            t0e = rs.saturation->t0_error;
            n = rs.saturation->n;
            ne = rs.saturation->n_error;
        }
        fits.rows.push_back({run.label, std::to_string(run.points.size()), na(c), na(ce), na(t0),
                             na(t0e), na(n), na(ne),
                             rs.saturation ? (rs.saturation->identifiable ? "true" : "false") : "NA"});

        const std::string key = "run." + std::to_string(r) + ".";
        summary += "\n" + key + "label = " + run.label + "\n";
        summary += key + "n_points = " + std::to_string(run.points.size()) + "\n";
        summary += key + "c = " + na(c) + "\n" + key + "c_error = " + na(ce) + "\n";
        summary += key + "t0_k = " + na(t0) + "\n" + key + "t0_error_k = " + na(t0e) + "\n";
        summary += key + "n = " + na(n) + "\n" + key + "n_error = " + na(ne) + "\n";
        for (std::size_t i = 0; i < rs.warnings.size(); ++i) {
            summary += key + "warning." + std::to_string(i) + " = " + rs.warnings[i] + "\n";
        }
        rep.runs.push_back(std::move(rs));
    }
    plot.add_line({0.0, xmax * 1e3}, {0.0, xmax * 1e3}, {"#000000", 1.0, true, 1.0},
                  "identity-line", "c = 1");

    rep.files.push_back({"runs.csv", io::to_csv(io::runs_table(runs))});
    rep.files.push_back({"fits.csv", io::to_csv(fits)});
    rep.files.push_back({"comparison.svg", plot.render()});
    rep.files.push_back({"summary.txt", summary});
    return rep;
}

}  // namespace cryotherm::analysis
