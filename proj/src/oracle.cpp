#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "vstirap/engine.hpp"
#include "vstirap/errors.hpp"

namespace vstirap {

namespace {

struct Rates {
    double emit;
    double spont;
};

Rates rates(const Liouvillian& l, const Matrix& rho)
{
    const Eigen::Map<const Vector> v(rho.data(), rho.size());
    return {l.emission_rate(v), l.spontaneous_rate(v)};
}

DensityState step(const Liouvillian& l, const DensityState& s, double g, double omega, double dt)
{
    const Matrix propagator = (dt * l.dense(g, omega)).exp();
    const Eigen::Map<const Vector> v(s.rho.data(), s.rho.size());
    const Vector next = propagator * v;

    DensityState out;
    const auto d = s.rho.rows();
    out.rho = Eigen::Map<const Matrix>(next.data(), d, d);
    out.rho = 0.5 * (out.rho + out.rho.adjoint()).eval();
    out.t = s.t + dt;

    const Rates before = rates(l, s.rho);
    const Rates after = rates(l, out.rho);
    out.acc_emit = s.acc_emit + 0.5 * dt * (before.emit + after.emit);
    out.acc_spont = s.acc_spont + 0.5 * dt * (before.spont + after.spont);
    return out;
}

} // namespace

DensityState oracle_step(const SystemParams& params, const DensityState& state, double g,
                         double omega, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidParameter("oracle step dt must be > 0");
    const Liouvillian l(params);
    return step(l, state, g, omega, dt);
}

Trajectory oracle_propagate(const SystemParams& params, const GeometryOffsets& geom, double dt,
                            const DensityState& initial, double span_cutoff)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidParameter("oracle step dt must be > 0");
    params.validate();
    const Liouvillian l(params);
    if (initial.rho.rows() != static_cast<Eigen::Index>(l.dim()))
        throw InvalidParameter("initial state dimension does not match n_max");

    const TimeSpan span = interaction_span(params, span_cutoff);
    Trajectory traj;
    DensityState s = initial;
    s.t = span.start;
    traj.snapshots.push_back(s);

    // Grid start + k dt, matching propagate's uniform sampling.
    for (std::size_t k = 1;; ++k) {
        const double t_next = std::min(span.start + static_cast<double>(k) * dt, span.end);
        const double h = t_next - s.t;
        if (h <= 0.0)
            break;
        const Envelopes env = envelopes(s.t + 0.5 * h, params, geom);
        s = step(l, s, env.g, env.omega, h);
        s.t = t_next;
        traj.snapshots.push_back(s);
        ++traj.accepted_steps;
        if (t_next >= span.end)
            break;
    }

    const DensityState& last = traj.snapshots.back();
    traj.summary.p_emit = last.acc_emit;
    traj.summary.p_spont = last.acc_spont;
    for (Eigen::Index k = 0; k < last.rho.rows(); ++k)
        traj.summary.populations.push_back(last.rho(k, k).real());
    return traj;
}

} // namespace vstirap
