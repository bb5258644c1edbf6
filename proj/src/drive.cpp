#include "vstirap/drive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vstirap/errors.hpp"
#include "vstirap/units.hpp"

namespace vstirap {

namespace {

double gaussian(double x, double w)
{
    const double r = x / w;
    return std::exp(-r * r);
}

} // namespace

double canonical_axial(double x, double lambda_opt)
{
    const double period = lambda_opt;
    const double half = 0.5 * lambda_opt;
    if (std::abs(x) <= half)
        return x;
    double r = std::fmod(x, period);
    if (r > half)
        r -= period;
    else if (r < -half)
        r += period;
    return r;
}

double cavity_coupling(double t, const SystemParams& params, const GeometryOffsets& geom)
{
    const double standing = std::cos(units::two_pi * geom.x_axial / params.lambda_opt);
    return params.g0 * standing * gaussian(geom.y_transverse, params.w_c) *
           gaussian(t * params.v, params.w_c);
}

double pump_rabi(double t, const SystemParams& params, const GeometryOffsets& geom)
{
    return params.omega0 * gaussian(geom.x_axial, params.w_p) *
           gaussian(t * params.v - params.delta_x, params.w_p);
}

TimeSpan interaction_span(const SystemParams& params, double cutoff)
{
    if (!(cutoff > 0.0 && cutoff < 1.0))
        throw InvalidParameter("span cutoff must lie in (0, 1)");
    // exp(-s^2) = cutoff
    const double s = std::sqrt(-std::log(cutoff));
    const double cavity_half = s * params.w_c / params.v;
    const double pump_half = s * params.w_p / params.v;
    const double pump_center = params.delay();
    TimeSpan span;
    span.start = std::min(-cavity_half, pump_center - pump_half);
    span.end = std::max(cavity_half, pump_center + pump_half);
    if (params.kappa > 0.0)
        span.end += 5.0 / (2.0 * params.kappa);
    return span;
}

Feasibility feasibility(const SystemParams& params)
{
    Feasibility f{};
    f.raman_ok = std::abs(params.delta_c - params.delta_p) < 2.0 * params.kappa;
    f.adiabatic_cavity = 2.0 * params.g0 * params.w_c / params.v;
    f.adiabatic_pump = params.omega0 * params.w_p / params.v;
    f.interaction_time = params.w_c / params.v;
    f.cavity_lifetime = params.kappa > 0.0 ? 1.0 / (2.0 * params.kappa)
                                           : std::numeric_limits<double>::infinity();
    f.emission_time_ok = f.interaction_time > f.cavity_lifetime;
    return f;
}

} // namespace vstirap
