#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "vstirap/engine.hpp"
#include "vstirap/errors.hpp"
#include "vstirap/observables.hpp"
#include "vstirap/units.hpp"

using namespace vstirap;
using vstirap::testing::projector;

namespace {

const SystemParams P = SystemParams::defaults();

DensityState state_of(const Matrix& rho, double t = 0.0)
{
    DensityState s;
    s.rho = rho;
    s.t = t;
    return s;
}

double purity(const Matrix& rho) { return (rho * rho).trace().real(); }

} // namespace

TEST_CASE("rhs: decoupled ground state is stationary")
{
    const Basis b(P.n_max);
    // Far enough out that the pump underflows to zero.
    const double t = -2e-3;
    REQUIRE(pump_rabi(t, P, {}) == 0.0);
    const RhsValue r = lindblad_rhs(DensityState::pure(b, {Level::g, 0}, t), t, P, {});
    CHECK(r.drho.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.d_emit == 0.0);
    CHECK(r.d_spont == 0.0);

    // Full cavity coupling with the pump off.
    const Liouvillian L(P);
    const auto d = static_cast<Eigen::Index>(b.dim());
    const Matrix rho = projector(b, Level::g, 0);
    const Vector v = Eigen::Map<const Vector>(rho.data(), d * d);
    Vector out(d * d);
    L.apply(P.g0, 0.0, v, out);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rhs: excited state decays at Gamma")
{
    const Basis b(P.n_max);
    // Both envelopes are exactly zero this far out.
    const double t = -1.0;
    REQUIRE(cavity_coupling(t, P, {}) == 0.0);
    REQUIRE(pump_rabi(t, P, {}) == 0.0);
    const RhsValue r = lindblad_rhs(DensityState::pure(b, {Level::e, 0}, t), t, P, {});
    const auto ke = static_cast<Eigen::Index>(b.index(Level::e, 0));
    const auto ku = static_cast<Eigen::Index>(b.index(Level::u, 0));
    const auto kg = static_cast<Eigen::Index>(b.index(Level::g, 0));
    CHECK(r.drho(ke, ke).real() == doctest::Approx(-P.gamma).epsilon(1e-14));
    CHECK(r.drho(ku, ku).real() == doctest::Approx(P.branch_u * P.gamma).epsilon(1e-14));
    CHECK(r.drho(kg, kg).real() == doctest::Approx(P.branch_g * P.gamma).epsilon(1e-14));
    CHECK(r.d_spont == doctest::Approx(P.gamma).epsilon(1e-14));
    CHECK(r.d_emit == 0.0);
}

TEST_CASE("rhs: trace preserved and matches the superoperator")
{
    std::mt19937_64 rng(7);
    for (int n_max : {1, 2}) {
        SystemParams q = P;
        q.n_max = n_max;
        q.delta_p = units::mhz_to_rad_s(-7.0);
        q.delta_c = units::mhz_to_rad_s(3.0);
        const Basis b(n_max);
        const Liouvillian L(q);
        const auto d = static_cast<Eigen::Index>(b.dim());
        for (int k = 0; k < 50; ++k) {
            const double t = -40e-6 + 2e-6 * k;
            const Matrix rho = vstirap::testing::random_hermitian(rng, d);
            const RhsValue r = lindblad_rhs(state_of(rho, t), t, q, {});
            CHECK(std::abs(r.drho.trace()) / q.gamma <= 1e-12);
            CHECK((r.drho - r.drho.adjoint()).cwiseAbs().maxCoeff() / q.gamma <= 1e-12);

            const Envelopes env = envelopes(t, q, {});
            const Vector v = Eigen::Map<const Vector>(rho.data(), d * d);
            Vector out(d * d);
            L.apply(env.g, env.omega, v, out);
            const Matrix m = Eigen::Map<const Matrix>(out.data(), d, d);
            CHECK((m - r.drho).cwiseAbs().maxCoeff() / q.gamma <= 1e-12);
            CHECK(L.emission_rate(v) == doctest::Approx(r.d_emit).epsilon(1e-12));
            CHECK(L.spontaneous_rate(v) == doctest::Approx(r.d_spont).epsilon(1e-12));

            const Vector dense = L.dense(env.g, env.omega) * v;
            CHECK((dense - out).cwiseAbs().maxCoeff() / q.gamma <= 1e-12);
        }
    }
}

TEST_CASE("rhs: non-finite input")
{
    const Basis b(P.n_max);
    DensityState s = DensityState::pure(b, {Level::u, 0});
    s.rho(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lindblad_rhs(s, 0.0, P, {}), NumericalDomainError);
    CHECK_THROWS_AS(lindblad_rhs(DensityState::pure(b, {Level::u, 0}), std::nan(""), P, {}),
                    NumericalDomainError);
}

TEST_CASE("propagate: resonant transit emits about 90 percent")
{
    const Trajectory tr = propagate(P);
    CHECK(std::abs(tr.summary.p_emit - 0.90) <= 0.03);
    CHECK(tr.summary.p_emit == tr.snapshots.back().acc_emit);
    CHECK(tr.summary.p_spont == tr.snapshots.back().acc_spont);

    const TimeSpan span = interaction_span(P, 1e-4);
    CHECK(tr.snapshots.front().t == span.start);
    CHECK(tr.snapshots.back().t == doctest::Approx(span.end).epsilon(1e-14));

    const Basis b(P.n_max);
    double prev_t = -std::numeric_limits<double>::infinity();
    double prev_emit = 0.0, prev_spont = 0.0;
    double worst_trace = 0.0, worst_herm = 0.0, worst_eig = 0.0;
    double worst_drop = 0.0;
    bool increasing = true;
    for (const DensityState& s : tr.snapshots) {
        increasing = increasing && s.t > prev_t;
        worst_drop = std::min({worst_drop, s.acc_emit - prev_emit, s.acc_spont - prev_spont});
        prev_t = s.t;
        prev_emit = s.acc_emit;
        prev_spont = s.acc_spont;
        worst_trace = std::max(worst_trace, std::abs(s.rho.trace().real() - 1.0));
        worst_herm = std::max(worst_herm, (s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Matrix> es(s.rho);
        worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff());
    }
    CHECK(increasing);
    // Nondecreasing up to the local error the step controller admits.
    CHECK(worst_drop >= -1e-9);
    CHECK(worst_trace <= 1e-8);
    CHECK(worst_herm <= 1e-10);
    CHECK(worst_eig >= -1e-8);
    CHECK(tr.snapshots.front().acc_emit == 0.0);

    // Bookkeeping.
    const std::vector<double>& pop = tr.summary.populations;
    const double pu0 = pop[b.index(Level::u, 0)];
    const double pg0 = pop[b.index(Level::g, 0)];
    CHECK(tr.summary.p_emit + tr.summary.p_spont >= 1.0 - pu0 - 1e-6);
    CHECK(tr.summary.p_emit <= 1.0 + 1e-6);
    CHECK(pg0 > 0.9);
    CHECK(pg0 == doctest::Approx(tr.summary.p_emit + P.branch_g * tr.summary.p_spont).epsilon(1e-3));
}

TEST_CASE("propagate: pump before cavity gives almost nothing")
{
    SystemParams q = P;
    q.delta_x = -90e-6; // pump maximum 45 us before the cavity maximum
    CHECK(propagate(q).summary.p_emit <= 0.05);
    q.delta_x = -45e-6;
    CHECK(propagate(q).summary.p_emit <= 0.05);
}

TEST_CASE("propagate: closed system stays pure")
{
    SystemParams q = P;
    q.kappa = 0.0;
    q.gamma = 0.0;
    // Without damping nothing pulls integration error back, so the default
    // tolerances leave a 1e-7 negative eigenvalue on the pure state.
    IntegratorConfig ic;
    ic.rel_tol = 1e-10;
    ic.abs_tol = 1e-12;
    const Trajectory tr = propagate(q, {}, ic);
    CHECK(tr.summary.p_emit == 0.0);
    CHECK(tr.summary.p_spont == 0.0);
    double worst = 0.0;
    for (const DensityState& s : tr.snapshots)
        worst = std::max(worst, std::abs(purity(s.rho) - 1.0));
    CHECK(worst <= 1e-6);
    CHECK(tr.snapshots.size() > 100);
}

TEST_CASE("propagate: no cavity coupling, no photon")
{
    SystemParams q = P;
    q.g0 = 0.0;
    const Trajectory tr = propagate(q);
    CHECK(tr.summary.p_emit <= 1e-12);
    CHECK(tr.summary.p_spont > 0.0);
}

TEST_CASE("propagate: lost branch removes population")
{
    SystemParams q = P;
    q.branch_u = 0.3;
    q.branch_g = 0.3;
    q.branch_lost = 0.4;
    IntegratorConfig ic;
    ic.snapshot_stride = 0;
    ic.check_positivity = false;
    // The trace is not conserved here, so this must not trip the trace check.
    Trajectory tr;
    CHECK_NOTHROW(tr = propagate(q, {}, ic));
    const double trace = tr.snapshots.back().rho.trace().real();
    CHECK(trace < 1.0);
    CHECK(trace == doctest::Approx(1.0 - q.branch_lost * tr.summary.p_spont).epsilon(1e-6));
}

TEST_CASE("propagate: sampling grid and stride")
{
    IntegratorConfig ic;
    ic.sample_interval = 1e-6;
    const Trajectory tr = propagate(P, {}, ic);
    const double t0 = tr.snapshots.front().t;
    for (std::size_t k = 1; k + 1 < tr.snapshots.size(); ++k)
        CHECK(tr.snapshots[k].t == doctest::Approx(t0 + 1e-6 * static_cast<double>(k)).epsilon(1e-12));

    IntegratorConfig only_ends;
    only_ends.snapshot_stride = 0;
    const Trajectory e = propagate(P, {}, only_ends);
    CHECK(e.snapshots.size() == 2);
    CHECK(e.summary.p_emit == doctest::Approx(tr.summary.p_emit).epsilon(1e-9));
}

TEST_CASE("propagate: errors")
{
    IntegratorConfig ic;
    ic.rel_tol = 0.0;
    CHECK_THROWS_AS(propagate(P, {}, ic), InvalidParameter);
    ic = {};
    ic.max_step = -1.0;
    CHECK_THROWS_AS(propagate(P, {}, ic), InvalidParameter);
    ic = {};
    ic.span_cutoff = 1.5;
    CHECK_THROWS_AS(propagate(P, {}, ic), InvalidParameter);

    const Basis wrong(2);
    CHECK_THROWS_AS(propagate(P, {}, {}, DensityState::pure(wrong, {Level::u, 0})), InvalidParameter);

    // A tiny step cap makes the step budget or the minimum step fail.
    const DriveFunction drive = [](double) { return Envelopes{0.0, 0.0}; };
    CHECK_THROWS_AS(propagate_drive(P, drive, {1.0, 0.0}, {}, DensityState::pure(Basis(1), {Level::u, 0})),
                    InvalidParameter);
}

TEST_CASE("propagate_drive: constant drive Rabi flop")
{
    // Resonant pump only, no decay: P_e = sin^2(omega t / 2).
    SystemParams q = P;
    q.kappa = 0.0;
    q.gamma = 0.0;
    const double omega = units::mhz_to_rad_s(1.0);
    const DriveFunction drive = [omega](double) { return Envelopes{0.0, omega}; };
    IntegratorConfig ic;
    ic.sample_interval = 50e-9;
    const Basis b(q.n_max);
    const Trajectory tr = propagate_drive(q, drive, {0.0, 2e-6}, ic, DensityState::pure(b, {Level::u, 0}));
    const auto ke = static_cast<Eigen::Index>(b.index(Level::e, 0));
    double worst = 0.0;
    for (const DensityState& s : tr.snapshots) {
        const double expect = std::pow(std::sin(omega * s.t / 2.0), 2);
        worst = std::max(worst, std::abs(s.rho(ke, ke).real() - expect));
    }
    CHECK(worst <= 1e-7);
}

TEST_CASE("trace distance")
{
    const Basis b(1);
    const Matrix a = projector(b, Level::u, 0);
    const Matrix c = projector(b, Level::g, 0);
    CHECK(trace_distance(a, a) == 0.0);
    CHECK(trace_distance(a, c) == doctest::Approx(1.0));
    CHECK(trace_distance(a, 0.5 * (a + c)) == doctest::Approx(0.5));
}
