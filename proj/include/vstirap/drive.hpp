// drive.hpp: time-dependent couplings seen by an atom falling through the
// cavity mode and the downstream pump beam, plus feasibility diagnostics.

#pragma once

#include "vstirap/model.hpp"

namespace vstirap {

/// Atom position relative to the cavity mode. x_axial runs along the cavity
/// axis (0 = antinode), y_transverse along the pump propagation direction
/// (0 = on the cavity axis).
struct GeometryOffsets {
    double x_axial = 0.0;
    double y_transverse = 0.0;
};

/// Reduces x to the canonical interval [-lambda/2, lambda/2] of the standing wave.
double canonical_axial(double x, double lambda_opt);

/// g(t) = g0 cos(2 pi x / lambda) exp(-(y / w_C)^2) exp(-(t v / w_C)^2)
double cavity_coupling(double t, const SystemParams& params, const GeometryOffsets& geom);

/// Omega_P(t) = Omega0 exp(-(x / w_P)^2) exp(-((t v - delta_x) / w_P)^2)
double pump_rabi(double t, const SystemParams& params, const GeometryOffsets& geom);

struct Envelopes {
    double g;
    double omega;
};

inline Envelopes envelopes(double t, const SystemParams& params, const GeometryOffsets& geom)
{
    return {cavity_coupling(t, params, geom), pump_rabi(t, params, geom)};
}

struct TimeSpan {
    double start;
    double end;
};

/// Window outside of which both envelopes are below cutoff times their peak,
/// extended at the end by five cavity lifetimes (2 kappa)^-1.
TimeSpan interaction_span(const SystemParams& params, double cutoff);

struct Feasibility {
    bool raman_ok;              // |Delta_C - Delta_P| < 2 kappa
    double adiabatic_cavity;    // 2 g0 w_C / v
    double adiabatic_pump;      // Omega0 w_P / v
    double interaction_time;    // w_C / v
    double cavity_lifetime;     // (2 kappa)^-1, +inf for kappa = 0
    bool emission_time_ok;      // interaction_time > cavity_lifetime
};

Feasibility feasibility(const SystemParams& params);

} // namespace vstirap
