#include "vstirap/engine.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "vstirap/errors.hpp"

namespace vstirap {

DensityState DensityState::pure(const Basis& basis, BasisState b, double t)
{
    const auto d = static_cast<Eigen::Index>(basis.dim());
    const auto i = static_cast<Eigen::Index>(basis.index(b));
    DensityState s;
    s.rho = Matrix::Zero(d, d);
    s.rho(i, i) = 1.0;
    s.t = t;
    return s;
}

void IntegratorConfig::validate() const
{
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw InvalidParameter("rel_tol must lie in (0, 1)");
    if (!(abs_tol > 0.0 && abs_tol < 1.0))
        throw InvalidParameter("abs_tol must lie in (0, 1)");
    if (!(max_step > 0.0) || !std::isfinite(max_step))
        throw InvalidParameter("max_step must be > 0");
    if (!(span_cutoff > 0.0 && span_cutoff < 1.0))
        throw InvalidParameter("span_cutoff must lie in (0, 1)");
    if (!(sample_interval >= 0.0) || !std::isfinite(sample_interval))
        throw InvalidParameter("sample_interval must be >= 0");
}

RhsValue lindblad_rhs(const DensityState& state, double t, const SystemParams& params,
                      const GeometryOffsets& geom)
{
    if (!state.rho.allFinite() || !std::isfinite(t))
        throw NumericalDomainError("non-finite density matrix or time in lindblad_rhs");
    const OperatorSet ops(Basis(params.n_max));
    if (state.rho.rows() != static_cast<Eigen::Index>(ops.dim()) || state.rho.cols() != state.rho.rows())
        throw InvalidParameter("density matrix dimension does not match n_max");

    const Envelopes env = envelopes(t, params, geom);
    const Matrix h = hamiltonian(params, ops, env.g, env.omega);
    RhsValue out;
    out.drho = lindblad_action(h, collapse_operators(params, ops), lost_decay_generator(params, ops),
                               state.rho);
    out.d_emit = 2.0 * params.kappa * (ops.number * state.rho).trace().real();
    out.d_spont = params.gamma * (ops.proj_e * state.rho).trace().real();
    return out;
}

namespace {

// (a (x) b) for dense matrices.
Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// vec(-i[H, X]) = -i (1 (x) H - H^T (x) 1) vec(X)
Matrix commutator_super(const Matrix& h)
{
    const Matrix id = Matrix::Identity(h.rows(), h.cols());
    const Complex i{0.0, 1.0};
    return -i * (kron(id, h) - kron(h.transpose(), id));
}


} // namespace

Liouvillian::Liouvillian(const SystemParams& params) : basis_(params.n_max)
{
    params.validate();
    const OperatorSet ops(basis_);
    const HamiltonianParts parts = hamiltonian_parts(params, ops);
    const Matrix id = Matrix::Identity(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));

    Matrix fixed = commutator_super(parts.detuning);
    for (const Matrix& c : collapse_operators(params, ops)) {
        const Matrix cdc = c.adjoint() * c;
        fixed += kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id);
    }
    const Matrix lost = lost_decay_generator(params, ops);
    fixed += kron(id, lost) + kron(lost.conjugate(), id);

    const Matrix cavity = commutator_super(parts.cavity);
    const Matrix pump = commutator_super(parts.pump);

    const Eigen::Index n = fixed.rows();
    row_start_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            if (fixed(r, c) == 0.0 && cavity(r, c) == 0.0 && pump(r, c) == 0.0)
                continue;
            col_.push_back(static_cast<int>(c));
            static_coef_.push_back(fixed(r, c));
            cavity_coef_.push_back(cavity(r, c));
            pump_coef_.push_back(pump(r, c));
        }
        row_start_[static_cast<std::size_t>(r) + 1] = static_cast<int>(col_.size());
    }

    emit_weight_.resize(dim());
    spont_weight_.resize(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
        const BasisState s = basis_.state(k);
        emit_weight_[k] = 2.0 * params.kappa * s.photons;
        spont_weight_[k] = s.level == Level::e ? params.gamma : 0.0;
    }
}

void Liouvillian::apply(double g, double omega, const Vector& vec_rho, Vector& out) const
{
    out.resize(static_cast<Eigen::Index>(row_start_.size()) - 1);
    apply(g, omega, vec_rho.data(), out.data());
}

void Liouvillian::apply(double g, double omega, const Complex* x, Complex* out) const
{
    const std::size_t n = row_start_.size() - 1;
    for (std::size_t r = 0; r < n; ++r) {
        Complex acc{0.0, 0.0};
        const auto end = static_cast<std::size_t>(row_start_[r + 1]);
        for (auto k = static_cast<std::size_t>(row_start_[r]); k < end; ++k)
            acc += (static_coef_[k] + g * cavity_coef_[k] + omega * pump_coef_[k]) * x[col_[k]];
        out[r] = acc;
    }
}

Matrix Liouvillian::dense(double g, double omega) const
{
    const auto n = static_cast<Eigen::Index>(row_start_.size()) - 1;
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto end = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(r) + 1]);
        for (auto k = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(r)]); k < end; ++k)
            m(r, col_[k]) = static_coef_[k] + g * cavity_coef_[k] + omega * pump_coef_[k];
    }
    return m;
}

double Liouvillian::emission_rate(const Complex* vec_rho) const
{
    const std::size_t d = dim();
    double r = 0.0;
    for (std::size_t k = 0; k < d; ++k)
        r += emit_weight_[k] * vec_rho[k * d + k].real();
    return r;
}

double Liouvillian::spontaneous_rate(const Complex* vec_rho) const
{
    const std::size_t d = dim();
    double r = 0.0;
    for (std::size_t k = 0; k < d; ++k)
        r += spont_weight_[k] * vec_rho[k * d + k].real();
    return r;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
// 5th minus embedded 4th order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;
constexpr std::size_t kMaxSteps = 50'000'000;

constexpr double kTraceTol = 1e-8;
constexpr double kHermTol = 1e-10;
constexpr double kPosTol = 1e-8;

// State vector layout: vec(rho) (D^2 entries) followed by acc_emit, acc_spont.
class TransitSystem {
public:
    TransitSystem(const SystemParams& params, const DriveFunction& drive)
        : liouville_(params), drive_(drive), d2_(static_cast<Eigen::Index>(liouville_.dim() * liouville_.dim()))
    {
    }

    Eigen::Index size() const { return d2_ + 2; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(liouville_.dim()); }

    void operator()(double t, const Vector& y, Vector& dy) const
    {
        const Envelopes env = drive_(t);
        liouville_.apply(env.g, env.omega, y.data(), dy.data());
        dy(d2_) = liouville_.emission_rate(y.data());
        dy(d2_ + 1) = liouville_.spontaneous_rate(y.data());
    }

private:
    Liouvillian liouville_;
    const DriveFunction& drive_;
    Eigen::Index d2_;
};

// Replaces the d x d column-major block by its Hermitian part and returns the
// largest |m - m^+| entry it had.
double symmetrize(Complex* m, Eigen::Index d)
{
    double defect = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
        Complex& diag = m[c * d + c];
        defect = std::max(defect, 2.0 * std::abs(diag.imag()));
        diag = diag.real();
        for (Eigen::Index r = c + 1; r < d; ++r) {
            Complex& lower = m[c * d + r];
            Complex& upper = m[r * d + c];
            defect = std::max(defect, std::abs(lower - std::conj(upper)));
            const Complex mean = 0.5 * (lower + std::conj(upper));
            lower = mean;
            upper = std::conj(mean);
        }
    }
    return defect;
}

Vector pack(const DensityState& s)
{
    const Eigen::Index d2 = s.rho.size();
    Vector y(d2 + 2);
    y.head(d2) = Eigen::Map<const Vector>(s.rho.data(), d2);
    y(d2) = s.acc_emit;
    y(d2 + 1) = s.acc_spont;
    return y;
}

DensityState unpack(const Vector& y, Eigen::Index dim, double t)
{
    DensityState s;
    const Eigen::Index d2 = dim * dim;
    s.rho = Eigen::Map<const Matrix>(y.data(), dim, dim);
    s.t = t;
    s.acc_emit = y(d2).real();
    s.acc_spont = y(d2 + 1).real();
    return s;
}

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double rtol, double atol)
{
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double r = std::abs(err(i)) / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

std::string sci(double x)
{
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << x;
    return os.str();
}

std::string at_time(double t)
{
    std::ostringstream os;
    os << " at t = " << t << " s";
    return os.str();
}

void check_state(const DensityState& s, double branch_lost, bool positivity, double slack)
{
    // Population leaving through the lost channel is branch_lost * acc_spont.
    const double trace_err = std::abs(s.rho.trace().real() + branch_lost * s.acc_spont - 1.0);
    if (trace_err > kTraceTol)
        throw IntegratorFailure("trace drifted by " + sci(trace_err) + at_time(s.t));
    if (s.acc_emit < -slack || s.acc_spont < -slack)
        throw IntegratorFailure("negative accumulator" + at_time(s.t));
    if (positivity) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(s.rho, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        if (lo < -kPosTol)
            throw IntegratorFailure("negative eigenvalue " + sci(lo) + at_time(s.t));
    }
}

TrajectorySummary summarize(const DensityState& last)
{
    TrajectorySummary sum;
    sum.p_emit = last.acc_emit;
    sum.p_spont = last.acc_spont;
    sum.populations.resize(static_cast<std::size_t>(last.rho.rows()));
    for (Eigen::Index k = 0; k < last.rho.rows(); ++k)
        sum.populations[static_cast<std::size_t>(k)] = last.rho(k, k).real();
    return sum;
}

} // namespace

Trajectory propagate_drive(const SystemParams& params, const DriveFunction& drive, TimeSpan span,
                           const IntegratorConfig& integ, const DensityState& initial)
{
    params.validate();
    integ.validate();
    if (!(span.end > span.start) || !std::isfinite(span.start) || !std::isfinite(span.end))
        throw InvalidParameter("integration span must be finite with end > start");

    TransitSystem sys(params, drive);
    if (initial.rho.rows() != sys.dim() || initial.rho.cols() != sys.dim())
        throw InvalidParameter("initial state dimension does not match n_max");
    if (!initial.rho.allFinite())
        throw NumericalDomainError("initial state has non-finite entries");

    DensityState start = initial;
    start.t = span.start;
    check_state(start, params.branch_lost, integ.check_positivity, 0.0);

    Trajectory traj;
    traj.snapshots.push_back(start);

    const Eigen::Index n = sys.size();
    const Eigen::Index d = sys.dim();
    const Eigen::Index d2 = d * d;
    Vector y = pack(start);
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n), err(n);

    double t = span.start;
    sys(t, y, k1);

    // Initial step from the derivative scale, capped by max_step.
    double h;
    {
        const double d0 = error_norm(y, y, y, integ.rel_tol, integ.abs_tol);
        const double d1 = error_norm(k1, y, y, integ.rel_tol, integ.abs_tol);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * (span.end - span.start) : 0.01 * d0 / d1;
        h = std::min({h, integ.max_step, span.end - span.start});
    }

    const bool uniform = integ.sample_interval > 0.0;
    std::size_t next_sample = 1;
    auto sample_time = [&](std::size_t k) {
        return std::min(span.start + static_cast<double>(k) * integ.sample_interval, span.end);
    };

    std::size_t since_snapshot = 0;
    bool last_rejected = false;
    while (t < span.end) {
        if (traj.accepted_steps + traj.rejected_steps > kMaxSteps)
            throw StiffnessError("step budget exhausted" + at_time(t));

        double target = span.end;
        if (uniform)
            target = sample_time(next_sample);
        bool hits_target = false;
        const double h_proposed = h;
        // Snap when the step would stop just short of the target.
        if (t + h * (1.0 + 1e-3) >= target) {
            h = target - t;
            hits_target = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1e-12, std::abs(t)))
            throw StiffnessError("step size underflow" + at_time(t));

        tmp = y + h * a21 * k1;
        sys(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        sys(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        sys(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        sys(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        sys(t + h, tmp, k6);
        y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        sys(t + h, y5, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double en = error_norm(err, y, y5, integ.rel_tol, integ.abs_tol);
        if (!std::isfinite(en))
            throw NumericalDomainError("non-finite state during integration" + at_time(t));

        if (en > 1.0) {
            ++traj.rejected_steps;
            last_rejected = true;
            h *= std::max(kMinFactor, kSafety * std::pow(en, -0.2));
            continue;
        }

        // Accepted step.
        const double prev_emit = y(d2).real();
        const double prev_spont = y(d2 + 1).real();
        t = hits_target ? target : t + h;
        ++traj.accepted_steps;

        // Hermiticity check, then re-symmetrize in place. L commutes with the
        // adjoint, so the FSAL derivative is symmetrized the same way.
        const double herm = symmetrize(y5.data(), d);
        symmetrize(k7.data(), d);
        double trace = 0.0;
        for (Eigen::Index c = 0; c < d; ++c)
            trace += y5(c * d + c).real();
        if (herm > kHermTol)
            throw IntegratorFailure("Hermiticity lost" + at_time(t));
        if (std::abs(trace + params.branch_lost * y5(d2 + 1).real() - 1.0) > kTraceTol)
            throw IntegratorFailure("trace drifted" + at_time(t));
        // Accumulators are monotone up to the local error the controller admits;
        // the RMS norm lets one component carry sqrt(n) times the per-entry scale.
        const double rms_bound = std::sqrt(static_cast<double>(n));
        auto slack = [&](double v) { return rms_bound * (integ.abs_tol + integ.rel_tol * std::abs(v)); };
        if (y5(d2).real() < prev_emit - slack(prev_emit) ||
            y5(d2 + 1).real() < prev_spont - slack(prev_spont))
            throw IntegratorFailure("accumulator decreased" + at_time(t));
        y.swap(y5);
        k1.swap(k7);

        const bool final_step = t >= span.end;
        bool store = false;
        if (uniform) {
            if (hits_target) {
                store = true;
                ++next_sample;
            }
        } else if (integ.snapshot_stride > 0 && ++since_snapshot >= integ.snapshot_stride) {
            store = true;
            since_snapshot = 0;
        }
        if (final_step)
            store = true;
        if (store) {
            DensityState current = unpack(y, d, t);
            check_state(current, params.branch_lost, integ.check_positivity, integ.abs_tol);
            traj.snapshots.push_back(std::move(current));
        } else if (y(d2).real() < -integ.abs_tol || y(d2 + 1).real() < -integ.abs_tol) {
            throw IntegratorFailure("negative accumulator" + at_time(t));
        }

        double factor = kSafety * std::pow(std::max(en, 1e-10), -0.2);
        factor = std::clamp(factor, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
        h = std::min(h * factor, integ.max_step);
        // A step shortened to land on a target says little about the scale.
        if (hits_target)
            h = std::max(h, std::min(h_proposed, integ.max_step));
        last_rejected = false;
    }

    traj.summary = summarize(traj.snapshots.back());
    return traj;
}

Trajectory propagate(const SystemParams& params, const GeometryOffsets& geom,
                     const IntegratorConfig& integ, const DensityState& initial)
{
    params.validate();
    const TimeSpan span = interaction_span(params, integ.span_cutoff);
    const DriveFunction drive = [&params, geom](double t) { return envelopes(t, params, geom); };
    return propagate_drive(params, drive, span, integ, initial);
}

Trajectory propagate(const SystemParams& params, const GeometryOffsets& geom,
                     const IntegratorConfig& integ)
{
    const Basis basis(params.n_max);
    return propagate(params, geom, integ, DensityState::pure(basis, {Level::u, 0}));
}

double trace_distance(const Matrix& a, const Matrix& b)
{
    const Matrix diff = a - b;
    const Matrix herm = 0.5 * (diff + diff.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

} // namespace vstirap
