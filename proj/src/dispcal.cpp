#include "cryotherm/dispcal.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cryotherm::dispcal {

double q_beta_squared(double q_factor, double beta) { return q_factor * beta * beta; }

double dphi_dx_from_ratio(double ratio, double q_factor, double l_tot, double mass, double omega) {
    if (!(q_factor > 0.0) || !(l_tot > 0.0) || !(mass > 0.0) || !(ratio >= 0.0)) {
        throw ParameterError("dphi_dx_from_ratio: need Q, L_tot, mass > 0 and ratio >= 0");
    }
    return std::sqrt(l_tot * mass * omega * omega * ratio / q_factor);
}

namespace {

double wrap_angle(double a) {
    a = std::remainder(a, constants::two_pi);
    return a <= -constants::pi ? a + constants::two_pi : a;
}

struct SortedSweep {
    std::vector<double> f;
    std::vector<std::complex<double>> z;
};

SortedSweep sorted_by_frequency(const ComplexSweep& s) {
    if (s.freqs.size() != s.values.size()) {
        throw DataError("sweep: freqs and values differ in length");
    }
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return s.freqs[a] < s.freqs[b]; });
    SortedSweep out;
    for (std::size_t i : idx) {
        out.f.push_back(s.freqs[i]);
        out.z.push_back(s.values[i]);
    }
    return out;
}

// Indices of the outer fraction of the sweep, split evenly between both ends.
std::vector<std::size_t> outer_indices(std::size_t n, double fraction) {
    const std::size_t per_side =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.5 * fraction * static_cast<double>(n))));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < std::min(per_side, n); ++i) {
        idx.push_back(i);
        if (n - 1 - i > i) {
            idx.push_back(n - 1 - i);
        }
    }
    return idx;
}

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::complex<double> outer_median(const SortedSweep& s, double fraction) {
    std::vector<double> re, im;
    for (std::size_t i : outer_indices(s.z.size(), fraction)) {
        re.push_back(s.z[i].real());
        im.push_back(s.z[i].imag());
    }
    return {median(re), median(im)};
}

// Per-quadrature noise from successive differences of the outer points,
// where the resonance contributes little.
double outer_noise_sigma(const SortedSweep& s, double fraction) {
    const std::size_t n = s.z.size();
    const std::size_t per_side =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(0.5 * fraction * static_cast<double>(n))));
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < std::min(per_side, n); ++i) {
        acc += std::norm(s.z[i + 1] - s.z[i]);
        acc += std::norm(s.z[n - 1 - i] - s.z[n - 2 - i]);
        count += 2;
    }
    return count > 0 ? std::sqrt(acc / static_cast<double>(count)) / 2.0 : 0.0;
}

struct Detection {
    bool detected = false;
    double noise_sigma = 0.0;
};

Detection detect_response(const SortedSweep& s, const AnalysisOptions& opts) {
    Detection d;
    d.noise_sigma = outer_noise_sigma(s, opts.outer_fraction);
    const auto m = outer_median(s, opts.outer_fraction);
    double dev = 0.0;
    double scale = std::abs(m);
    for (const auto& z : s.z) {
        dev = std::max(dev, std::abs(z - m));
        scale = std::max(scale, std::abs(z));
    }
    d.detected = dev > opts.detection_sigma * d.noise_sigma && dev > 1e-12 * scale;
    return d;
}

PhaseFit fit_phase_sense(const SortedSweep& s, const dsp::CircleFit& c, double theta0, double f0,
                         double hw, int sense) {
    const std::size_t n = s.z.size();
    std::vector<double> ang(n);
    for (std::size_t j = 0; j < n; ++j) {
        ang[j] = std::arg(s.z[j] - c.center);
    }
    const double scale_f = hw;
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        const double th = p[0], fc = f0 + p[1] * scale_f, h = p[2] * scale_f;
        for (std::size_t j = 0; j < n; ++j) {
            const double u = (s.f[j] - fc) / h;
            const double model = th - 2.0 * sense * std::atan(u);
            const auto k = static_cast<Eigen::Index>(j);
            r[k] = wrap_angle(ang[j] - model);
            const double d = 2.0 * sense / (h * (1.0 + u * u));
            jac(k, 0) = -1.0;
            jac(k, 1) = -d * scale_f;
            jac(k, 2) = -d * u * scale_f;
        }
    };
    Eigen::VectorXd p0(3);
    p0 << theta0, 0.0, 1.0;
    const auto lm = dsp::levenberg_marquardt(residuals, p0, n, {},
                                             [](const Eigen::VectorXd& p) { return p[2] > 0.0; });
    PhaseFit pf;
    pf.sense = sense;
    pf.theta0 = wrap_angle(lm.params[0]);
    pf.f0 = f0 + lm.params[1] * scale_f;
    pf.half_width = lm.params[2] * scale_f;
    const double s2 = n > 3 ? lm.chi2 / static_cast<double>(n - 3) : 0.0;
    pf.theta0_error = std::sqrt(std::abs(lm.covariance(0, 0)) * s2);
    pf.f0_error = std::sqrt(std::abs(lm.covariance(1, 1)) * s2) * scale_f;
    pf.half_width_error = std::sqrt(std::abs(lm.covariance(2, 2)) * s2) * scale_f;
    pf.converged = lm.converged && std::isfinite(lm.chi2);
    return pf;
}

double phase_chi2(const SortedSweep& s, const dsp::CircleFit& c, const PhaseFit& pf) {
    double chi2 = 0.0;
    for (std::size_t j = 0; j < s.z.size(); ++j) {
        const double model = pf.theta0 - 2.0 * pf.sense * std::atan((s.f[j] - pf.f0) / pf.half_width);
        const double r = wrap_angle(std::arg(s.z[j] - c.center) - model);
        chi2 += r * r;
    }
    return chi2;
}

PhaseFit fit_phase(const SortedSweep& s, const dsp::CircleFit& c, std::complex<double> anchor0,
                   double hw_fallback) {
    const double theta0 = std::arg(c.center - anchor0);
    // Resonance: point farthest from the off-resonance anchor.
    std::size_t ip = 0;
    for (std::size_t j = 1; j < s.z.size(); ++j) {
        if (std::abs(s.z[j] - anchor0) > std::abs(s.z[ip] - anchor0)) {
            ip = j;
        }
    }
    // Half-power points lie sqrt(2) r from the anchor.
    double lo = s.f[ip], hi = s.f[ip];
    for (std::size_t j = 0; j < s.z.size(); ++j) {
        if (std::abs(s.z[j] - anchor0) >= std::sqrt(2.0) * c.radius) {
            lo = std::min(lo, s.f[j]);
            hi = std::max(hi, s.f[j]);
        }
    }
    double hw = 0.5 * (hi - lo);
    if (!(hw > 0.0)) {
        hw = hw_fallback;
    }
    PhaseFit best;
    double best_chi2 = std::numeric_limits<double>::infinity();
    for (int sense : {1, -1}) {
        const auto pf = fit_phase_sense(s, c, theta0, s.f[ip], hw, sense);
        const double chi2 = phase_chi2(s, c, pf);
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best = pf;
        }
    }
    return best;
}

struct Anchor {
    std::complex<double> point;
    double magnitude_error = 0.0;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
};

// Anchor = centre + r exp(i phi); covariance from the circle and the angle.
Anchor make_anchor(const dsp::CircleFit& c, double phi, double phi_error) {
    Anchor a;
    const std::complex<double> e = std::polar(1.0, phi);
    a.point = c.center + c.radius * e;
    Eigen::Matrix<double, 2, 4> jac;
    // Parameters: centre re, centre im, radius, angle.
    jac << 1.0, 0.0, e.real(), -c.radius * e.imag(),
           0.0, 1.0, e.imag(), c.radius * e.real();
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
    cov(0, 0) = c.center_re_error * c.center_re_error;
    cov(1, 1) = c.center_im_error * c.center_im_error;
    cov(2, 2) = c.radius_error * c.radius_error;
    cov(0, 1) = cov(1, 0) = c.cov_re_im;
    cov(0, 2) = cov(2, 0) = c.cov_re_radius;
    cov(1, 2) = cov(2, 1) = c.cov_im_radius;
    cov(3, 3) = phi_error * phi_error;
    a.covariance = jac * cov * jac.transpose();
    const double mag = std::abs(a.point);
    if (mag > 0.0) {
        const Eigen::Vector2d u(a.point.real() / mag, a.point.imag() / mag);
        a.magnitude_error = std::sqrt(std::max(0.0, u.dot(a.covariance * u)));
    } else {
        a.magnitude_error = std::sqrt(0.5 * a.covariance.trace());
    }
    return a;
}

struct CircleStage {
    dsp::CircleFit circle;
    PhaseFit phase;
    Anchor anchor;
};

CircleStage circle_stage(const SortedSweep& s, const AnalysisOptions& opts, double hw_fallback) {
    CircleStage st;
    st.circle = dsp::fit_circle(s.z);
    const auto m = outer_median(s, opts.outer_fraction);
    const double phi_m = std::arg(m - st.circle.center);
    const auto projected = st.circle.center + std::polar(st.circle.radius, phi_m);
    st.phase = fit_phase(s, st.circle, projected, hw_fallback);
    if (opts.anchor == AnchorMethod::asymptotic && st.phase.converged) {
        st.anchor = make_anchor(st.circle, st.phase.theta0 + constants::pi, st.phase.theta0_error);
    } else {
        st.anchor = make_anchor(st.circle, phi_m, 0.0);
    }
    return st;
}

}  // namespace

SweepAnalysis analyze_sweep(const ComplexSweep& sweep, const physmodel::ResonatorParams& res,
                            const physmodel::CircuitParams& circ, const AnalysisOptions& opts) {
    physmodel::validate(res);
    physmodel::validate(circ);
    if (sweep.size() < 8) {
        throw DataError("analyze_sweep: need at least 8 sweep points");
    }
    const auto s = sorted_by_frequency(sweep);
    SweepAnalysis out;
    out.l_tot = physmodel::total_inductance(circ);
    if (!sweep.resonance_covered) {
        out.warnings.push_back("sweep window does not cover the resonance");
    }

    const auto det = detect_response(s, opts);
    out.noise_sigma = det.noise_sigma;
    out.response_detected = det.detected;
    if (!det.detected) {
        out.crosstalk_vector = outer_median(s, opts.outer_fraction);
        out.v_crosstalk = std::abs(out.crosstalk_vector);
        out.crosstalk_phase = std::arg(out.crosstalk_vector);
        out.kappa = physmodel::DisplacementConversion::from_volts_per_meter(0.0);
        out.warnings.push_back("no resonance response above the noise");
        return out;
    }

    const auto st = circle_stage(s, opts, res.f0 / (2.0 * res.q_factor));
    out.circle = st.circle;
    out.phase = st.phase;
    out.crosstalk_vector = st.anchor.point;
    out.v_crosstalk = std::abs(st.anchor.point);
    out.v_crosstalk_error = st.anchor.magnitude_error;
    out.crosstalk_phase = std::arg(st.anchor.point);
    out.v_drive = 2.0 * st.circle.radius;
    out.v_drive_error = 2.0 * st.circle.radius_error;
    if (out.noise_sigma == 0.0) {
        out.noise_sigma = st.circle.rms_residual;
    }

    std::vector<double> power(s.z.size());
    for (std::size_t j = 0; j < s.z.size(); ++j) {
        power[j] = std::norm(s.z[j] - st.anchor.point);
    }
    out.lorentzian = dsp::fit_lorentzian(s.f, power);
    const auto& lz = out.lorentzian;
    double f0 = res.f0;
    double rel_f0 = 0.0;
    if (lz.converged && lz.width > 0.0) {
        out.q_fit = lz.center / lz.width;
        out.q_fit_error = out.q_fit * std::hypot(lz.center_error / lz.center, lz.width_error / lz.width);
        f0 = lz.center;
        rel_f0 = lz.center_error / lz.center;
        const double amp = std::sqrt(std::max(0.0, lz.peak_height()));
        out.lorentzian_consistent =
            std::abs(amp - out.v_drive) <= opts.lorentzian_tolerance * out.v_drive;
        if (!out.lorentzian_consistent) {
            out.warnings.push_back("Lorentzian amplitude disagrees with the circle diameter");
        }
    } else {
        out.q_fit = res.q_factor;
        out.lorentzian_consistent = false;
        out.warnings.push_back("Lorentzian fit did not converge; using the nominal Q");
    }

    const double sig_ct = out.v_crosstalk_error;
    out.electrostatic_suspect = out.v_crosstalk <= 3.0 * sig_ct;
    if (out.electrostatic_suspect) {
        out.warnings.push_back("crosstalk vector consistent with zero: electrostatic drive suspected");
    }
    if (!(out.v_crosstalk > 0.0)) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.ratio = out.q_beta_sq = out.beta = out.dphi_dx = nan;
        out.kappa = physmodel::DisplacementConversion::from_volts_per_meter(nan);
        return out;
    }

    out.ratio = out.v_drive / out.v_crosstalk;
    const double rel_ratio =
        std::hypot(out.v_drive_error / std::max(out.v_drive, 1e-300), sig_ct / out.v_crosstalk);
    out.ratio_error = out.ratio * rel_ratio;
    out.q_beta_sq = out.ratio;
    out.q_beta_sq_error = out.ratio_error;
    const double rel_q = out.q_fit > 0.0 ? out.q_fit_error / out.q_fit : 0.0;
    out.beta = std::sqrt(out.q_beta_sq / out.q_fit);
    out.beta_error = 0.5 * out.beta * std::hypot(rel_ratio, rel_q);

    const double omega = constants::two_pi * f0;
    const double mass = res.m_eff ? *res.m_eff : physmodel::stiffness(res) / (res.omega0() * res.omega0());
    out.dphi_dx = dphi_dx_from_ratio(out.ratio, out.q_fit, out.l_tot, mass, omega);
    const double rel_dphi = 0.5 * std::sqrt(rel_ratio * rel_ratio + rel_q * rel_q + 4.0 * rel_f0 * rel_f0);
    out.dphi_dx_error = out.dphi_dx * rel_dphi;
    out.kappa = physmodel::kappa_chain(circ, out.dphi_dx);
    out.kappa_error = std::abs(out.kappa.volts_per_meter()) * rel_dphi;
    return out;
}

ElectrostaticReport detect_electrostatic(const ComplexSweep& sweep_grounded,
                                         const ComplexSweep* reference,
                                         const AnalysisOptions& opts) {
    if (sweep_grounded.size() < 8) {
        throw DataError("detect_electrostatic: need at least 8 sweep points");
    }
    const auto s = sorted_by_frequency(sweep_grounded);
    ElectrostaticReport rep;
    const auto det = detect_response(s, opts);
    rep.noise_sigma = det.noise_sigma;
    rep.response_detected = det.detected;
    if (!det.detected) {
        return rep;
    }
    const double span = s.f.back() - s.f.front();
    const auto st = circle_stage(s, opts, span / 20.0);
    rep.radius = st.circle.radius;
    rep.offset = st.anchor.point;
    rep.offset_magnitude = std::abs(st.anchor.point);
    const Eigen::Vector2d v(st.anchor.point.real(), st.anchor.point.imag());
    const Eigen::Matrix2d cov = st.anchor.covariance;
    if (cov.determinant() > 0.0) {
        rep.offset_significance = std::sqrt(v.dot(cov.inverse() * v));
    } else {
        rep.offset_significance = rep.offset_magnitude > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    rep.flagged = rep.offset_significance <= 3.0;

    if (reference != nullptr) {
        const auto r = sorted_by_frequency(*reference);
        const auto rdet = detect_response(r, opts);
        if (rdet.detected && r.z.size() >= 8) {
            const double rspan = r.f.back() - r.f.front();
            const auto rst = circle_stage(r, opts, rspan / 20.0);
            rep.rotation = wrap_angle(st.phase.theta0 - rst.phase.theta0);
        }
    }
    return rep;
}

HysteresisReport compare_updown(const ComplexSweep& up, const ComplexSweep& down) {
    const auto a = sorted_by_frequency(up);
    const auto b = sorted_by_frequency(down);
    if (a.f.size() != b.f.size() || a.f.empty()) {
        throw DataError("compare_updown: sweeps have different lengths");
    }
    for (std::size_t i = 0; i < a.f.size(); ++i) {
        if (std::abs(a.f[i] - b.f[i]) > 1e-9 * std::max(std::abs(a.f[i]), 1.0)) {
            throw DataError("compare_updown: frequency grids differ at point " + std::to_string(i));
        }
    }
    const auto circle = dsp::fit_circle(a.z);
    if (!(circle.radius > 0.0)) {
        throw DataError("compare_updown: degenerate circle");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.z.size(); ++i) {
        acc += std::norm(a.z[i] - b.z[i]);
    }
    HysteresisReport rep;
    rep.n_pairs = a.z.size();
    rep.metric = std::sqrt(acc / static_cast<double>(a.z.size())) / circle.radius;
    // Independent noise of rms sigma per quadrature in both sweeps gives
    // rms |up - down| = 2 sigma; the circle residual estimates sigma.
    rep.expected_metric = 2.0 * circle.rms_residual / circle.radius;
    rep.flagged = rep.metric > 3.0 * rep.expected_metric;
    return rep;
}

}  // namespace cryotherm::dispcal
