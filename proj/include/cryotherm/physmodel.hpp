#pragma once

// Physical parameter sets and closed-form derived quantities for a
// magnetically read out cantilever resonator.

#include <optional>

namespace cryotherm::physmodel {

/// Mechanical mode of the resonator. SI units throughout.
struct ResonatorParams {
    double f0 = 0.0;        // Hz
    double q_factor = 0.0;  // dimensionless
    std::optional<double> m_eff;         // kg
    std::optional<double> k_spring;      // N/m
    std::optional<double> tip_diameter;  // m
    std::optional<double> tip_density;   // kg/m^3
    /// Allowed relative mismatch between k_spring and m_eff*(2*pi*f0)^2.
    double mass_consistency_tolerance = 0.25;

    double omega0() const;
};

/// Throws ParameterError when an invariant is violated.
void validate(const ResonatorParams& p);

/// Orientation of the SQUID current-coupling constant. The manufacturer
/// number is quoted with unit A/Phi0 although it appears in the chain as
/// dPhi_SQ/dI, so the direction has to be stated explicitly.
enum class CouplingOrientation {
    current_per_flux,  // value in A/Phi0; dPhi_SQ/dI = 1/value
    flux_per_current,  // value in Phi0/A; dPhi_SQ/dI = value
};

/// Two-stage SQUID readout circuit: pickup loop coupled through a
/// flux transformer into the SQUID input circuit.
struct CircuitParams {
    double l_fi = 0.0;    // flux injection (calibration) coil, H
    double l_inp = 0.0;   // SQUID input coil, H
    double l_par1 = 0.0;  // parasitic, pickup side, H
    double l_par2 = 0.0;  // parasitic, SQUID side, H
    double l_t1 = 0.0;    // transformer, pickup side, H
    double l_t2 = 0.0;    // transformer, SQUID side, H
    double l_pl = 0.0;    // pickup loop, H
    double m_12 = 0.0;    // transformer mutual inductance, H
    double squid_voltage_gain = 0.43;         // V/Phi0
    double squid_current_coupling = 5e-7;     // see orientation
    CouplingOrientation coupling_orientation = CouplingOrientation::current_per_flux;

    /// dPhi_SQ/dI in Phi0/A, resolved through the orientation flag.
    double squid_flux_per_current() const;
};

void validate(const CircuitParams& c);

/// Normal-metal wire of the flux-noise thermometer.
struct WireParams {
    double radius = 0.0;        // m
    double conductivity = 0.0;  // S/m
};

void validate(const WireParams& w);

/// Voltage/displacement conversion factor. Stores one number together with
/// the direction it was quoted in and exposes both orientations.
class DisplacementConversion {
public:
    enum class Orientation { volts_per_meter, meters_per_volt };

    DisplacementConversion() = default;
    static DisplacementConversion from_volts_per_meter(double v);
    static DisplacementConversion from_meters_per_volt(double v);

    double volts_per_meter() const;
    double meters_per_volt() const;
    Orientation stored_orientation() const { return orientation_; }
    double stored_value() const { return value_; }

private:
    DisplacementConversion(double value, Orientation o) : value_(value), orientation_(o) {}
    double value_ = 0.0;
    Orientation orientation_ = Orientation::volts_per_meter;
};

/// k = m_eff * (2 pi f0)^2. Throws ParameterError without a mass.
double spring_constant(const ResonatorParams& p);

/// Stiffness used for energy conversion: explicit k_spring if given,
/// otherwise derived from the mass.
double stiffness(const ResonatorParams& p);

/// Amplitude correlation time tau = 2 Q / omega0.
double correlation_time(const ResonatorParams& p);

/// Thermal force noise sqrt(4 kB T m_eff omega0 / Q) in N/sqrt(Hz).
double force_noise_asd(const ResonatorParams& p, double temperature);

/// Mass of a homogeneous sphere, (pi/6) d^3 rho.
double tip_mass(double diameter, double density);

/// Inductance seen by the SQUID input circuit with the flux transformer
/// reflected in: L_fi + L_inp + L_par2 + L_t2 - M12^2 / (L_t1 + L_pl + L_par1).
double total_inductance(const CircuitParams& c);

/// kappa = dV/dPhi_SQ * dPhi_SQ/dI * (1 / L_tot) * dPhi/dx.
DisplacementConversion kappa_chain(const CircuitParams& c, double dphi_dx);

}  // namespace cryotherm::physmodel
