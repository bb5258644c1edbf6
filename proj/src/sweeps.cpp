#include "vstirap/sweeps.hpp"

#include <cmath>
#include <limits>

#include "vstirap/errors.hpp"
#include "vstirap/parallel.hpp"
#include "vstirap/units.hpp"

namespace vstirap {

bool SweepResult::all_converged() const
{
    for (auto c : converged)
        if (!c)
            return false;
    return true;
}

std::size_t SweepResult::flat_index(std::span<const std::size_t> idx) const
{
    if (idx.size() != axes.size())
        throw InvalidParameter("index rank does not match sweep rank");
    std::size_t flat = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (idx[a] >= axes[a].values.size())
            throw InvalidParameter("sweep index out of range");
        flat = flat * axes[a].values.size() + idx[a];
    }
    return flat;
}

double SweepResult::at(std::size_t i, std::size_t j) const
{
    const std::size_t idx[2] = {i, j};
    return values[flat_index(idx)];
}

IntegratorConfig SweepOptions::sweep_integrator()
{
    IntegratorConfig c;
    c.snapshot_stride = 0;
    return c;
}

double emission_probability(const SystemParams& params, const GeometryOffsets& geom,
                            const IntegratorConfig& integ)
{
    return propagate(params, geom, integ).summary.p_emit;
}

namespace {

struct Point {
    SystemParams params;
    GeometryOffsets geom;
};

// Evaluates every point (in parallel) into a result whose axes are already set.
void evaluate(SweepResult& result, const std::vector<Point>& points, const SweepOptions& options)
{
    options.integ.validate();
    const std::size_t n = points.size();
    result.values.assign(n, std::numeric_limits<double>::quiet_NaN());
    result.converged.assign(n, 0);
    result.errors.assign(n, std::string{});
    result.integrator = options.integ;

    parallel_for(n, options.threads, [&](std::size_t i) {
        try {
            result.values[i] = emission_probability(points[i].params, points[i].geom, options.integ);
            result.converged[i] = 1;
        } catch (const Error& e) {
            result.errors[i] = e.what();
        }
    });
}

void require_finite(std::span<const double> xs, const char* what)
{
    if (xs.empty())
        throw InvalidParameter(std::string(what) + " grid is empty");
    for (double x : xs)
        if (!std::isfinite(x))
            throw InvalidParameter(std::string(what) + " grid has non-finite values");
}

std::vector<double> scaled(std::span<const double> xs, double (*convert)(double))
{
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs)
        out.push_back(convert(x));
    return out;
}

} // namespace

SweepResult delay_scan(const SystemParams& params, std::span<const double> delays,
                       const SweepOptions& options)
{
    params.validate();
    require_finite(delays, "delay");
    SweepResult r;
    r.params = params;
    r.axes.push_back({"delay", "us", scaled(delays, units::to_us)});
    std::vector<Point> pts;
    for (double d : delays) {
        Point p{params, {}};
        p.params.delta_x = d * params.v;
        pts.push_back(p);
    }
    evaluate(r, pts, options);
    return r;
}

SweepResult axial_scan(const SystemParams& params, std::span<const double> positions, double delay,
                       const SweepOptions& options)
{
    params.validate();
    require_finite(positions, "axial position");
    for (double x : positions)
        if (std::abs(x) > 0.5 * params.lambda_opt * (1.0 + 1e-12))
            throw InvalidParameter("axial positions must lie within [-lambda/2, lambda/2]");
    SweepResult r;
    r.params = params;
    r.params.delta_x = delay * params.v;
    r.axes.push_back({"x_axial", "um", scaled(positions, units::to_um)});
    std::vector<Point> pts;
    for (double x : positions)
        pts.push_back({r.params, {x, 0.0}});
    evaluate(r, pts, options);
    return r;
}

SweepResult detuning_map(const SystemParams& params, std::span<const double> grid_p,
                         std::span<const double> grid_c, double delay, const SweepOptions& options)
{
    params.validate();
    require_finite(grid_p, "pump detuning");
    require_finite(grid_c, "cavity detuning");
    SweepResult r;
    r.params = params;
    r.params.delta_x = delay * params.v;
    r.axes.push_back({"delta_p", "MHz", scaled(grid_p, units::rad_s_to_mhz)});
    r.axes.push_back({"delta_c", "MHz", scaled(grid_c, units::rad_s_to_mhz)});
    std::vector<Point> pts;
    pts.reserve(grid_p.size() * grid_c.size());
    for (double dp : grid_p) {
        for (double dc : grid_c) {
            Point p{r.params, {}};
            p.params.delta_p = dp;
            p.params.delta_c = dc;
            pts.push_back(p);
        }
    }
    evaluate(r, pts, options);
    return r;
}

SweepResult pump_spectrum(const SystemParams& params, double delta_c, std::span<const double> grid_p,
                          double delay, const SweepOptions& options)
{
    params.validate();
    require_finite(grid_p, "pump detuning");
    SweepResult r;
    r.params = params;
    r.params.delta_x = delay * params.v;
    r.params.delta_c = delta_c;
    r.axes.push_back({"delta_p", "MHz", scaled(grid_p, units::rad_s_to_mhz)});
    std::vector<Point> pts;
    for (double dp : grid_p) {
        Point p{r.params, {}};
        p.params.delta_p = dp;
        pts.push_back(p);
    }
    evaluate(r, pts, options);
    return r;
}

LorentzianFit lorentzian_fit(const SweepResult& curve, const LorentzianFitOptions& options)
{
    if (curve.axes.size() != 1) {
        LorentzianFit f;
        f.message = "lorentzian_fit needs a one-dimensional sweep";
        return f;
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.converged[i]) {
            x.push_back(curve.axes[0].values[i]);
            y.push_back(curve.values[i]);
        }
    }
    return fit_lorentzian(x, y, options);
}

double purcell_emission(const SystemParams& params, const IntegratorConfig& integ)
{
    SystemParams p = params;
    p.delta_c = 0.0;
    p.validate();

    // Long enough for the slowest of the bare decay channels to die out.
    double slowest = std::numeric_limits<double>::infinity();
    for (double rate : {2.0 * p.kappa, p.gamma})
        if (rate > 0.0)
            slowest = std::min(slowest, rate);
    const double duration = std::isfinite(slowest) ? 40.0 / slowest : 1e-6;

    const double g0 = p.g0;
    const DriveFunction drive = [g0](double) { return Envelopes{g0, 0.0}; };
    const Basis basis(p.n_max);
    const Trajectory traj = propagate_drive(p, drive, {0.0, duration}, integ,
                                            DensityState::pure(basis, {Level::e, 0}));
    return traj.summary.p_emit;
}

std::vector<double> linear_grid(double start, double stop, std::size_t points)
{
    if (points == 0)
        return {};
    if (points == 1)
        return {start};
    std::vector<double> out(points);
    const double step = (stop - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = start + static_cast<double>(i) * step;
    out.back() = stop;
    return out;
}

std::vector<double> default_delays()
{
    std::vector<double> out;
    for (int k = 0; k <= 40; ++k)
        out.push_back(units::us(-20.0 + 2.5 * k));
    return out;
}

std::vector<double> default_axial_positions(double lambda_opt, std::size_t points)
{
    std::vector<double> out(points);
    for (std::size_t k = 0; k < points; ++k)
        out[k] = 0.5 * lambda_opt * static_cast<double>(k) / static_cast<double>(points);
    return out;
}

std::vector<double> default_detunings()
{
    std::vector<double> out;
    for (int k = -20; k <= 20; ++k)
        out.push_back(units::mhz_to_rad_s(static_cast<double>(k)));
    return out;
}

} // namespace vstirap
