// sweeps.hpp: parameter scans of the single-atom emission probability
//
// Every grid point is an independent propagate() call. Points that fail to
// integrate are flagged (value NaN, converged = false) and the scan goes on.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vstirap/drive.hpp"
#include "vstirap/engine.hpp"
#include "vstirap/lorentzian.hpp"

namespace vstirap {

struct SweepAxis {
    std::string name;
    std::string unit;
    std::vector<double> values; // in `unit`
};

struct SweepResult {
    std::string quantity = "p_emit";
    std::vector<SweepAxis> axes;
    std::vector<double> values;          // row-major, last axis fastest
    std::vector<std::uint8_t> converged; // 1 if the point integrated cleanly
    std::vector<std::string> errors;     // empty string for converged points
    SystemParams params{};
    GeometryOffsets geometry{};
    IntegratorConfig integrator{};

    std::size_t size() const { return values.size(); }
    bool all_converged() const;
    /// Flat index of a multi-index (one entry per axis).
    std::size_t flat_index(std::span<const std::size_t> idx) const;
    double at(std::size_t i, std::size_t j) const;
};

struct SweepOptions {
    IntegratorConfig integ = sweep_integrator();
    unsigned threads = 0; // 0 = hardware concurrency

    /// Integrator settings for scans: endpoints only, positivity still checked there.
    static IntegratorConfig sweep_integrator();
};

/// p_emit for one transit; the value every sweep point is made of.
double emission_probability(const SystemParams& params, const GeometryOffsets& geom,
                            const IntegratorConfig& integ);

/// P_emit versus pulse delay delta_x / v (seconds; negative = pump first).
SweepResult delay_scan(const SystemParams& params, std::span<const double> delays,
                       const SweepOptions& options = {});

/// P_emit versus axial position (m) at the given delay (s).
SweepResult axial_scan(const SystemParams& params, std::span<const double> positions, double delay,
                       const SweepOptions& options = {});

/// P_emit over (Delta_P, Delta_C) in rad/s; axis 0 is Delta_P, axis 1 Delta_C.
SweepResult detuning_map(const SystemParams& params, std::span<const double> grid_p,
                         std::span<const double> grid_c, double delay,
                         const SweepOptions& options = {});

/// P_emit versus Delta_P (rad/s) at fixed Delta_C.
SweepResult pump_spectrum(const SystemParams& params, double delta_c, std::span<const double> grid_p,
                          double delay, const SweepOptions& options = {});

/// Lorentzian fit of a one-dimensional sweep in the units of its axis.
/// Flagged points are skipped.
LorentzianFit lorentzian_fit(const SweepResult& curve, const LorentzianFitOptions& options = {});

/// Emission into the cavity from |e,0> with constant coupling g0, no pump and
/// a resonant cavity.
double purcell_emission(const SystemParams& params, const IntegratorConfig& integ = {});

/// Ratio of the cavity emission probability to the free-space solid-angle
/// fraction the mode subtends.
inline double purcell_enhancement(double p_cavity, double solid_angle_fraction = 2.6e-5)
{
    return p_cavity / solid_angle_fraction;
}

// Default grids.
std::vector<double> default_delays();                            // -20..80 us, 2.5 us step (s)
std::vector<double> default_axial_positions(double lambda_opt, std::size_t points = 64); // one lambda/2 period (m)
std::vector<double> default_detunings();                         // -20..20 MHz, 41 points (rad/s)
std::vector<double> linear_grid(double start, double stop, std::size_t points);

} // namespace vstirap
