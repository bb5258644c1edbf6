// units.hpp: conversions between configured (lab) units and internal SI units

#pragma once

#include <numbers>

namespace vstirap::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Ordinary frequency in MHz to angular frequency in rad/s (omega = 2 pi nu).
constexpr double mhz_to_rad_s(double nu_mhz) { return nu_mhz * (two_pi * 1e6); }
constexpr double rad_s_to_mhz(double omega) { return omega / (two_pi * 1e6); }

constexpr double um(double x) { return x * 1e-6; }
constexpr double us(double t) { return t * 1e-6; }
constexpr double ns(double t) { return t * 1e-9; }
constexpr double nm(double x) { return x * 1e-9; }

// Division undoes um()/us() exactly for grid values like 2.5 or -15.
constexpr double to_um(double x) { return x / 1e-6; }
constexpr double to_us(double t) { return t / 1e-6; }

} // namespace vstirap::units
