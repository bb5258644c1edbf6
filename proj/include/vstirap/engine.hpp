// engine.hpp: Lindblad master equation over one atom transit.
//
// propagate() integrates the vectorized density matrix together with the
// emission and spontaneous-decay integrals using an embedded Dormand-Prince
// 5(4) pair. oracle_propagate() is an independent check that freezes the
// generator on short steps and applies its exact exponential.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vstirap/drive.hpp"
#include "vstirap/model.hpp"

namespace vstirap {

struct DensityState {
    Matrix rho;
    double t = 0.0;
    double acc_emit = 0.0;  // integral of 2 kappa <a^+ a>
    double acc_spont = 0.0; // integral of Gamma P_e

    /// |b><b| at time t with zero accumulators.
    static DensityState pure(const Basis& basis, BasisState b, double t = 0.0);
};

struct TrajectorySummary {
    double p_emit = 0.0;
    double p_spont = 0.0;
    std::vector<double> populations; // final diagonal of rho, Basis order
};

struct Trajectory {
    std::vector<DensityState> snapshots;
    TrajectorySummary summary;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = 50e-9;    // s; keeps h * Gamma inside the stability region
    double span_cutoff = 1e-4;  // envelope fraction bounding the automatic span
    // Keep every n-th accepted step; 0 keeps only the first and last state.
    std::size_t snapshot_stride = 1;
    // When > 0, snapshots are taken on the uniform grid start + k * interval
    // instead (steps are shortened to land on it). Overrides snapshot_stride.
    double sample_interval = 0.0;
    // Eigenvalue positivity check on every stored snapshot.
    bool check_positivity = true;

    void validate() const;
};

/// Derivatives returned by lindblad_rhs.
struct RhsValue {
    Matrix drho;
    double d_emit;
    double d_spont;
};

/// Direct matrix form of the master equation at time t.
RhsValue lindblad_rhs(const DensityState& state, double t, const SystemParams& params,
                      const GeometryOffsets& geom);

/// Superoperator form L(t) = L_static + g(t) L_cavity + omega(t) L_pump acting
/// on column-major vec(rho).
class Liouvillian {
public:
    explicit Liouvillian(const SystemParams& params);

    const Basis& basis() const { return basis_; }
    std::size_t dim() const { return basis_.dim(); }

    /// out = L(g, omega) vec_rho
    void apply(double g, double omega, const Vector& vec_rho, Vector& out) const;
    void apply(double g, double omega, const Complex* vec_rho, Complex* out) const;

    /// Dense D^2 x D^2 generator.
    Matrix dense(double g, double omega) const;

    /// d(acc_emit)/dt and d(acc_spont)/dt for the given vec(rho).
    double emission_rate(const Complex* vec_rho) const;
    double spontaneous_rate(const Complex* vec_rho) const;
    double emission_rate(const Vector& vec_rho) const { return emission_rate(vec_rho.data()); }
    double spontaneous_rate(const Vector& vec_rho) const { return spontaneous_rate(vec_rho.data()); }

private:
    Basis basis_;
    // Union sparsity pattern of the three pieces in CSR form, one coefficient
    // array per piece.
    std::vector<int> row_start_;
    std::vector<int> col_;
    std::vector<Complex> static_coef_;
    std::vector<Complex> cavity_coef_;
    std::vector<Complex> pump_coef_;
    std::vector<double> emit_weight_;  // 2 kappa n on each diagonal element
    std::vector<double> spont_weight_; // Gamma on each e diagonal element
};

using DriveFunction = std::function<Envelopes(double)>;

/// Adaptive integration with an arbitrary drive over an explicit span.
Trajectory propagate_drive(const SystemParams& params, const DriveFunction& drive, TimeSpan span,
                           const IntegratorConfig& integ, const DensityState& initial);

/// Atom transit at geometry geom over interaction_span(params, integ.span_cutoff).
/// The initial state's time is ignored and replaced by the span start.
Trajectory propagate(const SystemParams& params, const GeometryOffsets& geom,
                     const IntegratorConfig& integ, const DensityState& initial);

/// Same, starting from |u,0><u,0|.
Trajectory propagate(const SystemParams& params, const GeometryOffsets& geom = {},
                     const IntegratorConfig& integ = {});

/// Piecewise-constant propagator: the generator is frozen at each step
/// midpoint and exp(dt L) applied exactly; accumulators use the trapezoid rule.
/// Snapshots at every step. Span as for propagate with the given cutoff.
Trajectory oracle_propagate(const SystemParams& params, const GeometryOffsets& geom, double dt,
                            const DensityState& initial, double span_cutoff = 1e-4);

/// Single frozen-generator step of length dt with constant couplings.
DensityState oracle_step(const SystemParams& params, const DensityState& state, double g,
                         double omega, double dt);

/// Trace distance (1/2) ||a - b||_1 between Hermitian matrices.
double trace_distance(const Matrix& a, const Matrix& b);

} // namespace vstirap
