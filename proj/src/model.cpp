#include "vstirap/model.hpp"

#include <cmath>
#include <string>

#include "vstirap/errors.hpp"
#include "vstirap/units.hpp"

namespace vstirap {

SystemParams SystemParams::defaults()
{
    using namespace units;
    SystemParams p{};
    p.g0 = mhz_to_rad_s(4.5);
    p.kappa = 0.5 * mhz_to_rad_s(2.5);
    p.gamma = mhz_to_rad_s(6.0);
    p.branch_u = 0.5;
    p.branch_g = 0.5;
    p.branch_lost = 0.0;
    p.omega0 = mhz_to_rad_s(30.0);
    p.w_c = um(35.0);
    p.w_p = um(50.0);
    p.v = 2.0;
    p.delta_x = us(45.0) * p.v;
    p.delta_p = 0.0;
    p.delta_c = 0.0;
    p.lambda_opt = nm(780.24);
    p.n_max = 1;
    return p;
}

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw InvalidParameter(what);
}

bool finite(double x) { return std::isfinite(x); }

} // namespace

void SystemParams::validate() const
{
    // Rates may be zero (decoupled or lossless limits); geometry may not.
    require(finite(g0) && g0 >= 0.0, "g0 must be finite and >= 0");
    require(finite(kappa) && kappa >= 0.0, "kappa must be finite and >= 0");
    require(finite(gamma) && gamma >= 0.0, "gamma must be finite and >= 0");
    require(finite(omega0) && omega0 >= 0.0, "omega0 must be finite and >= 0");
    require(finite(w_c) && w_c > 0.0, "w_c must be > 0");
    require(finite(w_p) && w_p > 0.0, "w_p must be > 0");
    require(finite(v) && v > 0.0, "v must be > 0");
    require(finite(lambda_opt) && lambda_opt > 0.0, "lambda must be > 0");
    require(finite(delta_x), "delta_x must be finite");
    require(finite(delta_p) && finite(delta_c), "detunings must be finite");
    require(n_max >= 1, "n_max must be >= 1");
    for (double b : {branch_u, branch_g, branch_lost})
        require(finite(b) && b >= 0.0 && b <= 1.0, "branching fractions must lie in [0, 1]");
    require(std::abs(branch_u + branch_g + branch_lost - 1.0) <= 1e-12,
            "branching fractions must sum to 1");
}

Basis::Basis(int n_max) : n_max_(n_max)
{
    if (n_max < 1)
        throw InvalidParameter("n_max must be >= 1, got " + std::to_string(n_max));
}

Basis Basis::from_dim(std::size_t dim)
{
    if (dim < 6 || dim % 3 != 0)
        throw InvalidParameter("dimension " + std::to_string(dim) + " is not 3 (n_max + 1)");
    return Basis(static_cast<int>(dim / 3) - 1);
}

std::size_t Basis::index(BasisState s) const
{
    if (s.photons < 0 || s.photons > n_max_)
        throw InvalidParameter("photon number out of range");
    return static_cast<std::size_t>(3 * s.photons + static_cast<int>(s.level));
}

BasisState Basis::state(std::size_t index) const
{
    if (index >= dim())
        throw InvalidParameter("basis index out of range");
    return BasisState{static_cast<Level>(index % 3), static_cast<int>(index / 3)};
}

const char* level_name(Level level)
{
    switch (level) {
    case Level::u: return "u";
    case Level::e: return "e";
    case Level::g: return "g";
    }
    return "?";
}

OperatorSet::OperatorSet(const Basis& b) : basis(b)
{
    const auto d = static_cast<Eigen::Index>(b.dim());
    a = Matrix::Zero(d, d);
    proj_u = Matrix::Zero(d, d);
    proj_e = Matrix::Zero(d, d);
    proj_g = Matrix::Zero(d, d);
    sigma_eg = Matrix::Zero(d, d);
    sigma_eu = Matrix::Zero(d, d);

    for (int n = 0; n <= b.n_max(); ++n) {
        const auto u = static_cast<Eigen::Index>(b.index(Level::u, n));
        const auto e = static_cast<Eigen::Index>(b.index(Level::e, n));
        const auto g = static_cast<Eigen::Index>(b.index(Level::g, n));
        proj_u(u, u) = 1.0;
        proj_e(e, e) = 1.0;
        proj_g(g, g) = 1.0;
        sigma_eg(e, g) = 1.0;
        sigma_eu(e, u) = 1.0;
        if (n > 0) {
            for (Level lv : {Level::u, Level::e, Level::g}) {
                const auto lo = static_cast<Eigen::Index>(b.index(lv, n - 1));
                const auto hi = static_cast<Eigen::Index>(b.index(lv, n));
                a(lo, hi) = std::sqrt(static_cast<double>(n));
            }
        }
    }
    a_dag = a.adjoint();
    sigma_ge = sigma_eg.adjoint();
    sigma_ue = sigma_eu.adjoint();
    number = a_dag * a;
}

namespace {

void check_dims(const SystemParams& params, const OperatorSet& ops)
{
    if (ops.basis.n_max() != params.n_max)
        throw InvalidParameter("operator set built for n_max = " + std::to_string(ops.basis.n_max()) +
                               " but params request n_max = " + std::to_string(params.n_max));
}

} // namespace

HamiltonianParts hamiltonian_parts(const SystemParams& params, const OperatorSet& ops)
{
    check_dims(params, ops);
    HamiltonianParts parts;
    parts.detuning = params.delta_p * ops.proj_u + params.delta_c * ops.proj_g;
    const Matrix jc = ops.sigma_eg * ops.a;
    parts.cavity = jc + jc.adjoint();
    parts.pump = 0.5 * (ops.sigma_eu + ops.sigma_ue);
    return parts;
}

Matrix hamiltonian(const SystemParams& params, const OperatorSet& ops, double g, double omega)
{
    if (!std::isfinite(g) || !std::isfinite(omega))
        throw InvalidParameter("coupling strengths must be finite");
    const HamiltonianParts parts = hamiltonian_parts(params, ops);
    // Each part is exactly Hermitian, and so is a real-weighted sum of them.
    return parts.detuning + g * parts.cavity + omega * parts.pump;
}

std::vector<Matrix> collapse_operators(const SystemParams& params, const OperatorSet& ops)
{
    check_dims(params, ops);
    std::vector<Matrix> out;
    out.reserve(3);
    out.push_back(std::sqrt(2.0 * params.kappa) * ops.a);
    out.push_back(std::sqrt(params.branch_u * params.gamma) * ops.sigma_ue);
    out.push_back(std::sqrt(params.branch_g * params.gamma) * ops.sigma_ge);
    return out;
}

Matrix lost_decay_generator(const SystemParams& params, const OperatorSet& ops)
{
    check_dims(params, ops);
    return (-0.5 * params.branch_lost * params.gamma) * ops.proj_e;
}

Matrix lindblad_action(const Matrix& h, const std::vector<Matrix>& collapse, const Matrix& lost,
                       const Matrix& rho)
{
    const Complex i{0.0, 1.0};
    Matrix out = -i * (h * rho - rho * h);
    for (const Matrix& c : collapse) {
        const Matrix cdc = c.adjoint() * c;
        out += c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
    }
    out += lost * rho + rho * lost.adjoint();
    return out;
}

Vector dark_state(const Basis& basis, double g, double omega)
{
    if (g == 0.0 && omega == 0.0)
        throw UndefinedState("dark state undefined: g and omega both vanish");
    const double norm = std::hypot(2.0 * g, omega);
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(basis.dim()));
    psi(static_cast<Eigen::Index>(basis.index(Level::u, 0))) = 2.0 * g / norm;
    psi(static_cast<Eigen::Index>(basis.index(Level::g, 1))) = -omega / norm;
    return psi;
}

} // namespace vstirap
