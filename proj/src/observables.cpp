#include "vstirap/observables.hpp"

namespace vstirap {

double photon_emission_rate(const DensityState& state, const SystemParams& params)
{
    const Basis basis = Basis::from_dim(static_cast<std::size_t>(state.rho.rows()));
    double n = 0.0;
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        n += basis.state(k).photons * state.rho(i, i).real();
    }
    return 2.0 * params.kappa * n;
}

std::vector<double> populations(const DensityState& state)
{
    std::vector<double> out(static_cast<std::size_t>(state.rho.rows()));
    for (Eigen::Index k = 0; k < state.rho.rows(); ++k)
        out[static_cast<std::size_t>(k)] = state.rho(k, k).real();
    return out;
}

double dark_state_fidelity(const DensityState& state, double t, const SystemParams& params,
                           const GeometryOffsets& geom)
{
    const Basis basis = Basis::from_dim(static_cast<std::size_t>(state.rho.rows()));
    const Envelopes env = envelopes(t, params, geom);
    const Vector a0 = dark_state(basis, env.g, env.omega);
    return (a0.adjoint() * state.rho * a0)(0, 0).real();
}

double integrated_emission(const Trajectory& traj, const SystemParams& params)
{
    double total = 0.0;
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
        const DensityState& a = traj.snapshots[k - 1];
        const DensityState& b = traj.snapshots[k];
        total += 0.5 * (b.t - a.t) *
                 (photon_emission_rate(a, params) + photon_emission_rate(b, params));
    }
    return total;
}

} // namespace vstirap
