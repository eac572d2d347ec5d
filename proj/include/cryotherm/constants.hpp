#pragma once

#include <numbers>

namespace cryotherm::constants {

// CODATA 2018 exact / recommended values.
inline constexpr double k_boltzmann = 1.380649e-23;        // J/K
inline constexpr double mu0 = 1.25663706212e-6;            // N/A^2
inline constexpr double flux_quantum = 2.067833848e-15;    // Wb

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace cryotherm::constants
