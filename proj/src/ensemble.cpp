#include "vstirap/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vstirap/errors.hpp"
#include "vstirap/parallel.hpp"
#include "vstirap/sweeps.hpp"
#include "vstirap/units.hpp"

namespace vstirap {

void EnsembleConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw InvalidParameter(what);
    };
    require(std::isfinite(slit_halfwidth) && slit_halfwidth >= 0.0, "slit_halfwidth must be >= 0");
    require(std::isfinite(atom_rate) && atom_rate >= 0.0, "atom_rate must be >= 0");
    require(drops >= 0, "drops must be >= 0");
    require(std::isfinite(record_window) && record_window >= 0.0, "record_window must be >= 0");
    require(detection_efficiency >= 0.0 && detection_efficiency <= 1.0,
            "detection_efficiency must lie in [0, 1]");
    require(std::isfinite(dark_count_rate) && dark_count_rate >= 0.0, "dark_count_rate must be >= 0");
    require(cache_nx >= 2 && cache_ny >= 2, "cache grid needs at least 2 points per axis");
    require(mc_samples >= 2, "mc_samples must be >= 2");
    require(std::isfinite(generation_fwhm) && generation_fwhm >= 0.0, "generation_fwhm must be >= 0");
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Rng derive_stream(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return Rng(z);
}

GeometryOffsets sample_atom(Rng& rng, const EnsembleConfig& config, double lambda_opt)
{
    // Both coordinates are drawn every time so the stream layout does not
    // depend on the sampling mode.
    const double ux = uniform01(rng);
    const double uy = uniform01(rng);
    GeometryOffsets g;
    g.x_axial = config.axial == AxialSampling::uniform ? ux * 0.5 * lambda_opt : 0.0;
    g.y_transverse =
        config.transverse == TransverseSampling::uniform ? (2.0 * uy - 1.0) * config.slit_halfwidth : 0.0;
    return g;
}

EmissionCache EmissionCache::build(const SystemParams& params, const EnsembleConfig& config,
                                   const IntegratorConfig& integ, unsigned threads)
{
    params.validate();
    config.validate();
    EmissionCache cache;
    cache.lambda_ = params.lambda_opt;
    cache.xs_ = config.axial == AxialSampling::uniform
                    ? linear_grid(0.0, 0.25 * params.lambda_opt, config.cache_nx)
                    : std::vector<double>{0.0};
    cache.ys_ = (config.transverse == TransverseSampling::uniform && config.slit_halfwidth > 0.0)
                    ? linear_grid(0.0, config.slit_halfwidth, config.cache_ny)
                    : std::vector<double>{0.0};

    IntegratorConfig quiet = integ;
    quiet.snapshot_stride = 0;
    quiet.sample_interval = 0.0;

    const std::size_t n = cache.xs_.size() * cache.ys_.size();
    cache.values_.assign(n, std::numeric_limits<double>::quiet_NaN());
    cache.ok_.assign(n, 0);
    std::vector<std::string> errors(n);
    parallel_for(n, threads, [&](std::size_t k) {
        const GeometryOffsets g{cache.xs_[k / cache.ys_.size()], cache.ys_[k % cache.ys_.size()]};
        try {
            cache.values_[k] = emission_probability(params, g, quiet);
            cache.ok_[k] = 1;
        } catch (const Error& e) {
            errors[k] = e.what();
        }
    });
    for (std::size_t k = 0; k < n; ++k) {
        if (!cache.ok_[k])
            cache.warnings_.push_back("cache point (" + std::to_string(k / cache.ys_.size()) + ", " +
                                      std::to_string(k % cache.ys_.size()) + ") excluded: " + errors[k]);
    }
    return cache;
}

std::size_t EmissionCache::flagged() const
{
    return static_cast<std::size_t>(std::count(ok_.begin(), ok_.end(), std::uint8_t{0}));
}

namespace {

// Cell index and fractional offset of v on a uniform grid.
std::pair<std::size_t, double> locate(const std::vector<double>& grid, double v)
{
    if (grid.size() == 1)
        return {0, 0.0};
    const double step = grid[1] - grid[0];
    double pos = std::clamp(v / step, 0.0, static_cast<double>(grid.size() - 1));
    auto i = static_cast<std::size_t>(pos);
    if (i >= grid.size() - 1)
        i = grid.size() - 2;
    return {i, pos - static_cast<double>(i)};
}

} // namespace

double EmissionCache::lookup(const GeometryOffsets& geom) const
{
    // |g| is even in x and lambda/2 periodic: fold onto [0, lambda/4].
    const double half = 0.5 * lambda_;
    double x = std::fmod(std::abs(geom.x_axial), half);
    if (x > 0.5 * half)
        x = half - x;
    const double y = std::abs(geom.y_transverse);

    const auto [i, fx] = locate(xs_, x);
    const auto [j, fy] = locate(ys_, y);
    const std::size_t i1 = std::min(i + 1, xs_.size() - 1);
    const std::size_t j1 = std::min(j + 1, ys_.size() - 1);

    const std::size_t ii[4] = {i, i1, i, i1};
    const std::size_t jj[4] = {j, j, j1, j1};
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    double sum = 0.0, wsum = 0.0;
    bool any = false;
    for (int c = 0; c < 4; ++c) {
        if (!ok(ii[c], jj[c]))
            continue;
        any = true;
        sum += w[c] * value(ii[c], jj[c]);
        wsum += w[c];
    }
    if (!any)
        return std::numeric_limits<double>::quiet_NaN();
    if (wsum <= 0.0) {
        // Only zero-weight corners survived; fall back to their plain mean.
        double s = 0.0;
        int m = 0;
        for (int c = 0; c < 4; ++c)
            if (ok(ii[c], jj[c])) {
                s += value(ii[c], jj[c]);
                ++m;
            }
        return s / m;
    }
    return sum / wsum;
}

MeanEmission mean_emission(const EmissionCache& cache, const EnsembleConfig& config,
                           double lambda_opt)
{
    config.validate();
    Rng rng = derive_stream(config.rng_seed, 0);
    double sum = 0.0, sum2 = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < config.mc_samples; ++k) {
        const double p = cache.lookup(sample_atom(rng, config, lambda_opt));
        if (std::isnan(p))
            continue;
        sum += p;
        sum2 += p * p;
        ++used;
    }
    MeanEmission out;
    out.samples = used;
    out.flagged_points = cache.flagged();
    if (used == 0) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.std_error = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double n = static_cast<double>(used);
    out.mean = sum / n;
    const double var = used > 1 ? std::max(0.0, (sum2 - n * out.mean * out.mean) / (n - 1.0)) : 0.0;
    out.std_error = std::sqrt(var / n);
    return out;
}

MeanEmission mean_emission(const SystemParams& params, const EnsembleConfig& config, double delay,
                           const IntegratorConfig& integ, unsigned threads)
{
    SystemParams p = params;
    p.delta_x = delay * p.v;
    const EmissionCache cache = EmissionCache::build(p, config, integ, threads);
    return mean_emission(cache, config, p.lambda_opt);
}

double two_atom_overlap(double atom_rate, double generation_fwhm)
{
    if (!(atom_rate >= 0.0) || !(generation_fwhm >= 0.0))
        throw InvalidParameter("atom rate and generation time must be >= 0");
    return atom_rate * generation_fwhm;
}

CountBin draw_bin(Rng& rng, const EmissionCache& cache, const EnsembleConfig& config,
                  double lambda_opt)
{
    CountBin bin;
    const double t_obs = config.observation_time();
    const double mean_atoms = config.atom_rate * t_obs;
    if (mean_atoms > 0.0)
        bin.n_atoms = std::poisson_distribution<std::uint64_t>(mean_atoms)(rng);
    for (std::uint64_t a = 0; a < bin.n_atoms; ++a) {
        const double p = cache.lookup(sample_atom(rng, config, lambda_opt));
        const double u_gen = uniform01(rng);
        const double u_det = uniform01(rng);
        if (std::isnan(p) || u_gen >= p)
            continue;
        ++bin.n_generated;
        if (u_det < config.detection_efficiency)
            ++bin.n_detected;
    }
    const double mean_dark = config.dark_count_rate * t_obs;
    if (mean_dark > 0.0)
        bin.n_dark = std::poisson_distribution<std::uint64_t>(mean_dark)(rng);
    bin.total = bin.n_detected + bin.n_dark;
    return bin;
}

CountRecord count_spectrum(const SystemParams& params, const EnsembleConfig& config,
                           std::span<const double> grid_p, double delta_c, double delay,
                           const IntegratorConfig& integ, unsigned threads)
{
    params.validate();
    config.validate();
    if (grid_p.empty())
        throw InvalidParameter("pump detuning grid is empty");

    SystemParams base = params;
    base.delta_x = delay * base.v;
    base.delta_c = delta_c;

    CountRecord rec;
    rec.delta_c = delta_c;
    rec.observation_time = config.observation_time();
    rec.seed = config.rng_seed;
    rec.bins.resize(grid_p.size());

    // Bins run one after another; each cache build fans out internally.
    for (std::size_t b = 0; b < grid_p.size(); ++b) {
        SystemParams p = base;
        p.delta_p = grid_p[b];
        const EmissionCache cache = EmissionCache::build(p, config, integ, threads);
        rec.flagged_points += cache.flagged();
        Rng rng = derive_stream(config.rng_seed, b + 1);
        rec.bins[b] = draw_bin(rng, cache, config, p.lambda_opt);
        rec.bins[b].delta_p = grid_p[b];
    }
    return rec;
}

LorentzianFit fit_spectrum(const CountRecord& record, const LorentzianFitOptions& options)
{
    std::vector<double> x, y;
    x.reserve(record.bins.size());
    y.reserve(record.bins.size());
    for (const CountBin& b : record.bins) {
        x.push_back(units::rad_s_to_mhz(b.delta_p));
        y.push_back(static_cast<double>(b.total));
    }
    return fit_lorentzian(x, y, options);
}

} // namespace vstirap
