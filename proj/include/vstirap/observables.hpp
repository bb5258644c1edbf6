// observables.hpp: scalar diagnostics of density states and trajectories

#pragma once

#include <vector>

#include "vstirap/drive.hpp"
#include "vstirap/engine.hpp"

namespace vstirap {

/// 2 kappa Tr(a^+ a rho), photons per second leaving the cavity.
double photon_emission_rate(const DensityState& state, const SystemParams& params);

/// Diagonal of rho in Basis order.
std::vector<double> populations(const DensityState& state);

/// <a0(t)| rho |a0(t)> with the dark state at the instantaneous couplings.
/// Throws UndefinedState where both envelopes vanish.
double dark_state_fidelity(const DensityState& state, double t, const SystemParams& params,
                           const GeometryOffsets& geom);

/// Trapezoid integral of photon_emission_rate over the snapshots.
double integrated_emission(const Trajectory& traj, const SystemParams& params);

} // namespace vstirap
