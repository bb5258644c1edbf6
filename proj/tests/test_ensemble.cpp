#include "doctest.h"

#include <cmath>
#include <cstring>

#include "vstirap/ensemble.hpp"
#include "vstirap/errors.hpp"
#include "vstirap/sweeps.hpp"
#include "vstirap/units.hpp"

using namespace vstirap;
using units::mhz_to_rad_s;

namespace {

const SystemParams P = SystemParams::defaults();
constexpr double kDelay = 35e-6;

SystemParams at_delay(double delay)
{
    SystemParams p = P;
    p.delta_x = delay * p.v;
    return p;
}

EnsembleConfig small_cache(std::size_t nx = 5, std::size_t ny = 3)
{
    EnsembleConfig c;
    c.cache_nx = nx;
    c.cache_ny = ny;
    return c;
}

bool same_bins(const CountRecord& a, const CountRecord& b)
{
    if (a.bins.size() != b.bins.size())
        return false;
    for (std::size_t k = 0; k < a.bins.size(); ++k) {
        const CountBin& x = a.bins[k];
        const CountBin& y = b.bins[k];
        if (std::memcmp(&x.delta_p, &y.delta_p, sizeof(double)) != 0 || x.n_atoms != y.n_atoms ||
            x.n_generated != y.n_generated || x.n_detected != y.n_detected || x.n_dark != y.n_dark ||
            x.total != y.total)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("config defaults and validation")
{
    const EnsembleConfig c;
    CHECK(c.slit_halfwidth == 50e-6);
    CHECK(c.atom_rate == 12e3);
    CHECK(c.drops == 50);
    CHECK(c.record_window == 2.6e-3);
    CHECK(c.detection_efficiency == 0.40);
    CHECK(c.dark_count_rate == 390.0);
    CHECK(c.observation_time() == doctest::Approx(0.130));
    CHECK_NOTHROW(c.validate());

    EnsembleConfig bad = c;
    bad.detection_efficiency = 1.2;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = c;
    bad.dark_count_rate = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = c;
    bad.atom_rate = std::nan("");
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = c;
    bad.cache_nx = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("random streams")
{
    Rng a = derive_stream(42, 0), b = derive_stream(42, 0), c = derive_stream(42, 1), d = derive_stream(43, 0);
    const auto a0 = a();
    CHECK(a0 == b());
    CHECK(a0 != c());
    CHECK(a0 != d());

    Rng r(1);
    for (int k = 0; k < 10000; ++k) {
        const double u = uniform01(r);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("atom sampling")
{
    const EnsembleConfig c;
    const double l = P.lambda_opt;

    Rng r1 = derive_stream(c.rng_seed, 0), r2 = derive_stream(c.rng_seed, 0);
    const GeometryOffsets g1 = sample_atom(r1, c, l), g2 = sample_atom(r2, c, l);
    CHECK(std::memcmp(&g1, &g2, sizeof g1) == 0);

    Rng rng = derive_stream(7, 3);
    const int n = 100000;
    double sx = 0.0, sy = 0.0;
    bool inside = true;
    for (int k = 0; k < n; ++k) {
        const GeometryOffsets g = sample_atom(rng, c, l);
        inside = inside && g.x_axial >= 0.0 && g.x_axial < l / 2.0 && std::abs(g.y_transverse) <= c.slit_halfwidth;
        sx += g.x_axial;
        sy += g.y_transverse;
    }
    CHECK(inside);
    // Unfolded x is uniform over [0, lambda/2): mean lambda/4, sigma (lambda/2)/sqrt(12 n).
    const double sigma_x = (l / 2.0) / std::sqrt(12.0 * n);
    CHECK(std::abs(sx / n - l / 4.0) <= 3.0 * sigma_x);
    const double sigma_y = (2.0 * c.slit_halfwidth) / std::sqrt(12.0 * n);
    CHECK(std::abs(sy / n) <= 3.0 * sigma_y);

    EnsembleConfig pinned = c;
    pinned.axial = AxialSampling::antinode;
    pinned.transverse = TransverseSampling::on_axis;
    for (int k = 0; k < 100; ++k) {
        const GeometryOffsets g = sample_atom(rng, pinned, l);
        CHECK(g.x_axial == 0.0);
        CHECK(g.y_transverse == 0.0);
    }
}

TEST_CASE("two-atom overlap and rate arithmetic")
{
    CHECK(two_atom_overlap(12e3, 12e-6) == doctest::Approx(0.144).epsilon(1e-12));
    CHECK(two_atom_overlap(0.0, 12e-6) == 0.0);
    CHECK_THROWS_AS(two_atom_overlap(-1.0, 12e-6), InvalidParameter);
    // 230 detected events in 130 ms at 40 % detection.
    const double generated_per_s = 230.0 / 0.130 / 0.4;
    CHECK(generated_per_s == doctest::Approx(4.4e3).epsilon(0.01));
}

TEST_CASE("emission cache")
{
    const SystemParams p = at_delay(kDelay);
    const EnsembleConfig c = small_cache(5, 3);
    const EmissionCache cache = EmissionCache::build(p, c, {}, 0);
    REQUIRE(cache.nx() == 5);
    REQUIRE(cache.ny() == 3);
    CHECK(cache.flagged() == 0);
    CHECK(cache.xs().back() == doctest::Approx(P.lambda_opt / 4.0));
    CHECK(cache.ys().back() == doctest::Approx(c.slit_halfwidth));

    // Grid nodes reproduce the standalone transit exactly.
    const IntegratorConfig quiet = SweepOptions::sweep_integrator();
    CHECK(cache.value(0, 0) == emission_probability(p, {0.0, 0.0}, quiet));
    CHECK(cache.lookup({0.0, 0.0}) == cache.value(0, 0));
    CHECK(cache.lookup({cache.xs()[2], cache.ys()[1]}) == doctest::Approx(cache.value(2, 1)).epsilon(1e-12));
    CHECK(cache.value(4, 0) <= 0.01);

    // Folding: mirror images and shifts by lambda/2 land on the same value.
    const GeometryOffsets g{0.06e-6, 20e-6};
    const double v = cache.lookup(g);
    CHECK(cache.lookup({-g.x_axial, g.y_transverse}) == doctest::Approx(v).epsilon(1e-12));
    CHECK(cache.lookup({g.x_axial, -g.y_transverse}) == doctest::Approx(v).epsilon(1e-12));
    CHECK(cache.lookup({g.x_axial + P.lambda_opt / 2.0, g.y_transverse}) == doctest::Approx(v).epsilon(1e-9));
    CHECK(cache.lookup({P.lambda_opt / 2.0 - g.x_axial, g.y_transverse}) == doctest::Approx(v).epsilon(1e-9));

    // Bilinear between nodes.
    const double mid = cache.lookup({0.5 * (cache.xs()[1] + cache.xs()[2]), cache.ys()[0]});
    CHECK(mid == doctest::Approx(0.5 * (cache.value(1, 0) + cache.value(2, 0))).epsilon(1e-12));
}

TEST_CASE("mean emission: degenerate distribution equals a single atom")
{
    const SystemParams p = at_delay(kDelay);
    EnsembleConfig c;
    c.axial = AxialSampling::antinode;
    c.transverse = TransverseSampling::on_axis;
    c.mc_samples = 1000;
    const MeanEmission m = mean_emission(P, c, kDelay);
    CHECK(m.mean == doctest::Approx(emission_probability(p, {}, SweepOptions::sweep_integrator())).epsilon(1e-12));
    CHECK(m.std_error == 0.0);
    CHECK(m.samples == 1000);

    EnsembleConfig zero_slit = c;
    zero_slit.transverse = TransverseSampling::uniform;
    zero_slit.slit_halfwidth = 0.0;
    CHECK(mean_emission(P, zero_slit, kDelay).mean == m.mean);
}

TEST_CASE("mean emission: variance halves with twice the samples")
{
    const EnsembleConfig base = small_cache(5, 3);
    const EmissionCache cache = EmissionCache::build(at_delay(kDelay), base, {}, 0);
    const int seeds = 400;
    auto spread = [&](std::size_t n) {
        double s = 0.0, s2 = 0.0;
        for (int k = 0; k < seeds; ++k) {
            EnsembleConfig c = base;
            c.mc_samples = n;
            c.rng_seed = 1000 + static_cast<std::uint64_t>(k);
            const double m = mean_emission(cache, c, P.lambda_opt).mean;
            s += m;
            s2 += m * m;
        }
        const double mean = s / seeds;
        return (s2 - seeds * mean * mean) / (seeds - 1);
    };
    const double ratio = spread(500) / spread(1000);
    MESSAGE("variance ratio " << ratio);
    // Sampling scatter of a variance estimate over 400 seeds is about 7 % each.
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.5);

    EnsembleConfig c = base;
    c.mc_samples = 4000;
    const double se1 = mean_emission(cache, c, P.lambda_opt).std_error;
    c.mc_samples = 8000;
    const double se2 = mean_emission(cache, c, P.lambda_opt).std_error;
    CHECK(se1 * se1 / (se2 * se2) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("mean emission falls with a wider slit")
{
    double prev = 2.0;
    for (double slit : {5e-6, 25e-6, 50e-6, 80e-6}) {
        EnsembleConfig c = small_cache(9, 5);
        c.slit_halfwidth = slit;
        c.mc_samples = 100000;
        const double m = mean_emission(P, c, kDelay).mean;
        MESSAGE("slit " << slit * 1e6 << " um: " << m);
        CHECK(m <= prev);
        prev = m;
    }
}

TEST_CASE("detector draws")
{
    const EnsembleConfig c = small_cache(5, 3);
    const EmissionCache cache = EmissionCache::build(at_delay(kDelay), c, {}, 0);
    const int bins = 2000;
    double dark = 0.0, atoms = 0.0;
    bool ordered = true;
    for (int b = 0; b < bins; ++b) {
        Rng rng = derive_stream(c.rng_seed, static_cast<std::uint64_t>(b));
        const CountBin bin = draw_bin(rng, cache, c, P.lambda_opt);
        ordered = ordered && bin.n_detected <= bin.n_generated && bin.n_generated <= bin.n_atoms &&
                  bin.total == bin.n_detected + bin.n_dark;
        dark += static_cast<double>(bin.n_dark);
        atoms += static_cast<double>(bin.n_atoms);
    }
    CHECK(ordered);
    // 390 Hz over 130 ms.
    const double mean_dark = 390.0 * 0.130;
    CHECK(mean_dark == doctest::Approx(50.7));
    CHECK(std::abs(dark / bins - mean_dark) <= 4.0 * std::sqrt(mean_dark / bins));
    CHECK(std::sqrt(mean_dark) == doctest::Approx(7.1).epsilon(0.01));
    const double mean_atoms = 12e3 * 0.130;
    CHECK(std::abs(atoms / bins - mean_atoms) <= 4.0 * std::sqrt(mean_atoms / bins));

    EnsembleConfig blind = c;
    blind.detection_efficiency = 0.0;
    for (int b = 0; b < 50; ++b) {
        Rng rng = derive_stream(5, static_cast<std::uint64_t>(b));
        const CountBin bin = draw_bin(rng, cache, blind, P.lambda_opt);
        CHECK(bin.n_detected == 0);
        CHECK(bin.total == bin.n_dark);
    }
}

TEST_CASE("count spectrum")
{
    EnsembleConfig c = small_cache(3, 2);
    const std::vector<double> grid{mhz_to_rad_s(-19.0), mhz_to_rad_s(-15.0), mhz_to_rad_s(-11.0)};
    const CountRecord a = count_spectrum(P, c, grid, mhz_to_rad_s(-15.0), kDelay, {}, 1);
    const CountRecord b = count_spectrum(P, c, grid, mhz_to_rad_s(-15.0), kDelay, {}, 4);
    CHECK(same_bins(a, b));
    CHECK(a.seed == c.rng_seed);
    CHECK(a.observation_time == doctest::Approx(0.130));
    REQUIRE(a.bins.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.bins[k].delta_p == grid[k]);
        CHECK(a.bins[k].n_detected <= a.bins[k].n_generated);
        CHECK(a.bins[k].n_generated <= a.bins[k].n_atoms);
        CHECK(a.bins[k].total == a.bins[k].n_detected + a.bins[k].n_dark);
    }
    CHECK(a.bins[1].total > a.bins[0].total);
    CHECK(a.bins[1].total > a.bins[2].total);
    // Peak of order 230 events in 130 ms.
    CHECK(a.bins[1].n_detected > 50);
    CHECK(a.bins[1].n_detected < 1000);

    c.rng_seed += 1;
    CHECK_FALSE(same_bins(a, count_spectrum(P, c, grid, mhz_to_rad_s(-15.0), kDelay, {}, 1)));

    c.detection_efficiency = 0.0;
    const CountRecord dark = count_spectrum(P, c, grid, mhz_to_rad_s(-15.0), kDelay, {}, 1);
    for (const CountBin& bin : dark.bins)
        CHECK(bin.total == bin.n_dark);
}

TEST_CASE("fit of a dark-count-only record")
{
    EnsembleConfig c = small_cache(2, 2);
    c.detection_efficiency = 0.0;
    const std::vector<double> grid = linear_grid(mhz_to_rad_s(-27.0), mhz_to_rad_s(-3.0), 25);
    const CountRecord rec = count_spectrum(P, c, grid, mhz_to_rad_s(-15.0), kDelay, {}, 0);
    const LorentzianFit f = fit_spectrum(rec);
    // Either no fit, or a line no larger than the Poisson scatter of the dark counts.
    const bool ok = !f.converged || std::abs(f.amplitude) <= 4.0 * std::sqrt(50.7);
    CHECK(ok);
}
