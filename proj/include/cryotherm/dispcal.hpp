#pragma once

// Displacement calibration from a driven frequency sweep: circle geometry,
// crosstalk vector, coupling strength and the resulting volts-per-metre
// conversion, plus electrostatic and hysteresis diagnostics.

#include "cryotherm/dsp/circle.hpp"
#include "cryotherm/dsp/fit.hpp"
#include "cryotherm/physmodel.hpp"
#include "cryotherm/series.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace cryotherm::dispcal {

/// Q beta^2 for a given quality factor and coupling strength.
double q_beta_squared(double q_factor, double beta);

/// dPhi/dx = sqrt(L_tot m omega^2 ratio / Q), ratio = V_drive / V_crosstalk.
double dphi_dx_from_ratio(double ratio, double q_factor, double l_tot, double mass, double omega);

enum class AnchorMethod {
    /// Point on the fitted circle reached at infinite detuning, found from the
    /// phase-versus-frequency fit (the outer-point median seeds it).
    asymptotic,
    /// Median of the outer fraction of the sweep, projected onto the circle.
    outer_median,
};

struct AnalysisOptions {
    AnchorMethod anchor = AnchorMethod::asymptotic;
    double outer_fraction = 0.10;
    /// Allowed relative mismatch between circle diameter and the Lorentzian
    /// peak amplitude.
    double lorentzian_tolerance = 0.10;
    /// Response below this many noise standard deviations counts as absent.
    double detection_sigma = 6.0;
};

/// Resonance phase model: arg(V - centre) = theta0 - 2 s atan((f - f0) / hw).
struct PhaseFit {
    double theta0 = 0.0;   // rad, direction of the drive vector
    double f0 = 0.0;       // Hz
    double half_width = 0.0;  // Hz, f0 / (2 Q)
    double theta0_error = 0.0;
    double f0_error = 0.0;
    double half_width_error = 0.0;
    int sense = 1;
    bool converged = false;
};

struct SweepAnalysis {
    dsp::CircleFit circle;
    PhaseFit phase;
    std::complex<double> crosstalk_vector;  // V
    double v_drive = 0.0;                   // V, circle diameter
    double v_drive_error = 0.0;
    double v_crosstalk = 0.0;  // V
    double v_crosstalk_error = 0.0;
    double crosstalk_phase = 0.0;  // rad
    /// Lorentzian fit of |V - crosstalk|^2 against frequency; width is f0/Q.
    dsp::LorentzianFit lorentzian;
    double q_fit = 0.0;
    double q_fit_error = 0.0;
    double ratio = 0.0;  // V_drive / V_crosstalk
    double ratio_error = 0.0;
    double q_beta_sq = 0.0;
    double q_beta_sq_error = 0.0;
    double beta = 0.0;
    double beta_error = 0.0;
    double l_tot = 0.0;     // H
    double dphi_dx = 0.0;   // Wb/m
    double dphi_dx_error = 0.0;
    physmodel::DisplacementConversion kappa;
    double kappa_error = 0.0;  // V/m
    double noise_sigma = 0.0;  // V per quadrature
    bool response_detected = false;
    bool lorentzian_consistent = true;
    /// Crosstalk consistent with zero: the drive may be electrostatic.
    bool electrostatic_suspect = false;
    std::vector<std::string> warnings;
};

/// Full calibration chain. The crosstalk vector is the off-resonance
/// asymptote of the sweep, v_drive is the circle diameter and
/// Q beta^2 = v_drive / v_crosstalk. Q and omega come from the Lorentzian fit;
/// the mass is m_eff, or k / omega0^2 when only k is known. Errors are first
/// order. A sweep without a detectable resonance returns v_drive = 0 and
/// zero conversion. Throws DataError when the circle fit fails.
SweepAnalysis analyze_sweep(const ComplexSweep& sweep, const physmodel::ResonatorParams& res,
                            const physmodel::CircuitParams& circ, const AnalysisOptions& opts = {});

struct ElectrostaticReport {
    bool flagged = false;
    bool response_detected = false;
    double radius = 0.0;   // V
    std::complex<double> offset;  // V, crosstalk vector of the grounded sweep
    double offset_magnitude = 0.0;
    /// Mahalanobis distance of the offset from zero.
    double offset_significance = 0.0;
    double noise_sigma = 0.0;
    /// Drive-vector rotation against the reference sweep, in (-pi, pi].
    std::optional<double> rotation;
};

/// Flags a resonance circle that is well above the noise while its offset is
/// consistent with zero within 3 sigma.
ElectrostaticReport detect_electrostatic(const ComplexSweep& sweep_grounded,
                                         const ComplexSweep* reference = nullptr,
                                         const AnalysisOptions& opts = {});

struct HysteresisReport {
    double metric = 0.0;          // rms |up - down| / radius
    double expected_metric = 0.0; // value expected from noise alone
    bool flagged = false;         // metric > 3 x expected
    std::size_t n_pairs = 0;
};

/// Pairs up and down sweeps by frequency. Throws DataError when the grids
/// differ.
HysteresisReport compare_updown(const ComplexSweep& up, const ComplexSweep& down);

}  // namespace cryotherm::dispcal
