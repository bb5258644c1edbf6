#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "vstirap/engine.hpp"
#include "vstirap/errors.hpp"

using namespace vstirap;

namespace {

const SystemParams P = SystemParams::defaults();

DensityState initial_u() { return DensityState::pure(Basis(P.n_max), {Level::u, 0}); }

Trajectory reference(double interval)
{
    IntegratorConfig ic;
    ic.sample_interval = interval;
    return propagate(P, {}, ic);
}

} // namespace

TEST_CASE("oracle step: free cavity decay")
{
    SystemParams q = P;
    q.gamma = 0.0;
    const Basis b(q.n_max);
    const auto k = static_cast<Eigen::Index>(b.index(Level::g, 1));
    const auto k0 = static_cast<Eigen::Index>(b.index(Level::g, 0));
    for (double dt : {1e-9, 10e-9, 200e-9, 1e-6}) {
        const DensityState s = oracle_step(q, DensityState::pure(b, {Level::g, 1}), 0.0, 0.0, dt);
        CHECK(s.rho(k, k).real() == doctest::Approx(std::exp(-2.0 * q.kappa * dt)).epsilon(1e-12));
        CHECK(s.rho(k0, k0).real() == doctest::Approx(1.0 - std::exp(-2.0 * q.kappa * dt)).epsilon(1e-12));
        CHECK(s.t == dt);
    }
}

TEST_CASE("oracle: bad step")
{
    CHECK_THROWS_AS(oracle_step(P, initial_u(), 0.0, 0.0, 0.0), InvalidParameter);
    CHECK_THROWS_AS(oracle_step(P, initial_u(), 0.0, 0.0, -1e-9), InvalidParameter);
    CHECK_THROWS_AS(oracle_propagate(P, {}, 0.0, initial_u()), InvalidParameter);
    CHECK_THROWS_AS(oracle_propagate(P, {}, -10e-9, initial_u()), InvalidParameter);
    CHECK_THROWS_AS(oracle_propagate(P, {}, std::nan(""), initial_u()), InvalidParameter);
}

namespace {

double worst_distance(double dt)
{
    const Trajectory a = reference(dt);
    const Trajectory o = oracle_propagate(P, {}, dt, initial_u());
    REQUIRE(a.snapshots.size() == o.snapshots.size());
    double worst = 0.0;
    bool same_times = true;
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
        same_times = same_times && std::abs(a.snapshots[k].t - o.snapshots[k].t) <= 1e-15;
        worst = std::max(worst, trace_distance(a.snapshots[k].rho, o.snapshots[k].rho));
    }
    CHECK(same_times);
    CHECK(a.summary.p_emit == doctest::Approx(o.summary.p_emit).epsilon(1e-5));
    // P_e rings at the pump Rabi frequency, which the trapezoid only roughly resolves.
    CHECK(a.summary.p_spont == doctest::Approx(o.summary.p_spont).epsilon(1e-3));
    MESSAGE("dt = " << dt * 1e9 << " ns, worst trace distance " << worst);
    return worst;
}

} // namespace

// Known to fail: the frozen-generator error at 10 ns is 2.2e-6 (second order in dt).
TEST_CASE("oracle agrees with adaptive integration at dt = 10 ns")
{
    CHECK(worst_distance(10e-9) <= 1e-6);
}

TEST_CASE("oracle agrees with adaptive integration at dt = 5 ns")
{
    CHECK(worst_distance(5e-9) <= 1e-6);
}

TEST_CASE("oracle converges as dt is halved")
{
    const double exact = propagate(P).summary.p_emit;
    double prev = 0.0;
    for (double dt : {80e-9, 40e-9, 20e-9}) {
        const double err = std::abs(oracle_propagate(P, {}, dt, initial_u()).summary.p_emit - exact);
        if (prev > 0.0)
            CHECK(err < 0.6 * prev);
        prev = err;
    }
}
