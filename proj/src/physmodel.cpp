#include "cryotherm/physmodel.hpp"

#include "cryotherm/constants.hpp"
#include "cryotherm/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cryotherm::physmodel {

using constants::k_boltzmann;
using constants::pi;
using constants::two_pi;

double ResonatorParams::omega0() const { return two_pi * f0; }

void validate(const ResonatorParams& p) {
    if (!(p.f0 > 0.0) || !std::isfinite(p.f0)) {
        throw ParameterError("resonator: f0 must be positive");
    }
    if (!(p.q_factor > 1.0) || !std::isfinite(p.q_factor)) {
        throw ParameterError("resonator: q_factor must exceed 1");
    }
    if (p.m_eff && !(*p.m_eff > 0.0)) {
        throw ParameterError("resonator: m_eff must be positive");
    }
    if (p.k_spring && !(*p.k_spring > 0.0)) {
        throw ParameterError("resonator: k_spring must be positive");
    }
    if (p.tip_diameter && *p.tip_diameter < 0.0) {
        throw ParameterError("resonator: tip_diameter must be non-negative");
    }
    if (p.tip_density && *p.tip_density < 0.0) {
        throw ParameterError("resonator: tip_density must be non-negative");
    }
    if (p.m_eff && p.k_spring) {
        const double derived = *p.m_eff * p.omega0() * p.omega0();
        const double mismatch = std::abs(*p.k_spring - derived) / *p.k_spring;
        if (mismatch > p.mass_consistency_tolerance) {
            throw ParameterError("resonator: k_spring and m_eff*(2 pi f0)^2 differ by " +
                                 std::to_string(mismatch * 100.0) + "%");
        }
    }
}

double CircuitParams::squid_flux_per_current() const {
    switch (coupling_orientation) {
        case CouplingOrientation::current_per_flux:
            return 1.0 / squid_current_coupling;
        case CouplingOrientation::flux_per_current:
            return squid_current_coupling;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void validate(const CircuitParams& c) {
    const double parts[] = {c.l_fi, c.l_inp, c.l_par1, c.l_par2, c.l_t1, c.l_t2, c.l_pl};
    for (double l : parts) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw ParameterError("circuit: inductances must be finite and non-negative");
        }
    }
    if (!(c.l_t1 + c.l_pl + c.l_par1 > 0.0)) {
        throw ParameterError("circuit: pickup-side loop inductance must be positive");
    }
    // Allow a few ulps of slack so that perfect coupling built from
    // M = sqrt(L1 L2) is not rejected by rounding.
    if (c.m_12 * c.m_12 > c.l_t1 * c.l_t2 * (1.0 + 1e-12)) {
        throw ParameterError("circuit: m_12^2 exceeds l_t1*l_t2");
    }
    if (!(c.squid_voltage_gain > 0.0) || !(c.squid_current_coupling > 0.0)) {
        throw ParameterError("circuit: SQUID gain constants must be positive");
    }
}

void validate(const WireParams& w) {
    if (!(w.radius > 0.0) || !(w.conductivity > 0.0)) {
        throw ParameterError("wire: radius and conductivity must be positive");
    }
}

DisplacementConversion DisplacementConversion::from_volts_per_meter(double v) {
    return {v, Orientation::volts_per_meter};
}

DisplacementConversion DisplacementConversion::from_meters_per_volt(double v) {
    return {v, Orientation::meters_per_volt};
}

double DisplacementConversion::volts_per_meter() const {
    return orientation_ == Orientation::volts_per_meter ? value_ : 1.0 / value_;
}

double DisplacementConversion::meters_per_volt() const {
    return orientation_ == Orientation::meters_per_volt ? value_ : 1.0 / value_;
}

double spring_constant(const ResonatorParams& p) {
    if (!p.m_eff) {
        throw ParameterError("spring_constant: effective mass not set");
    }
    if (!(p.f0 > 0.0)) {
        throw ParameterError("spring_constant: f0 must be positive");
    }
    const double w = p.omega0();
    return *p.m_eff * w * w;
}

double stiffness(const ResonatorParams& p) {
    if (p.k_spring) {
        return *p.k_spring;
    }
    return spring_constant(p);
}

double correlation_time(const ResonatorParams& p) {
    validate(p);
    return 2.0 * p.q_factor / p.omega0();
}

double force_noise_asd(const ResonatorParams& p, double temperature) {
    validate(p);
    if (!p.m_eff) {
        throw ParameterError("force_noise_asd: effective mass not set");
    }
    if (temperature < 0.0) {
        throw ParameterError("force_noise_asd: negative temperature");
    }
    return std::sqrt(4.0 * k_boltzmann * temperature * *p.m_eff * p.omega0() / p.q_factor);
}

double tip_mass(double diameter, double density) {
    if (diameter < 0.0 || density < 0.0) {
        throw ParameterError("tip_mass: diameter and density must be non-negative");
    }
    return pi / 6.0 * diameter * diameter * diameter * density;
}

double total_inductance(const CircuitParams& c) {
    validate(c);
    const double pickup_loop = c.l_t1 + c.l_pl + c.l_par1;
    const double secondary = c.l_t2 - c.m_12 * c.m_12 / pickup_loop;
    return c.l_fi + c.l_inp + c.l_par2 + secondary;
}

DisplacementConversion kappa_chain(const CircuitParams& c, double dphi_dx) {
    const double l_tot = total_inductance(c);
    if (!(l_tot > 0.0)) {
        throw ParameterError("kappa_chain: total inductance is zero");
    }
    const double volts_per_meter =
        c.squid_voltage_gain * c.squid_flux_per_current() * dphi_dx / l_tot;
    return DisplacementConversion::from_volts_per_meter(volts_per_meter);
}

}  // namespace cryotherm::physmodel
