// model.hpp: Hilbert space, operators, Hamiltonian and dissipators of a
// Lambda-type atom (levels u, e, g) coupled to one cavity mode.
//
// The pump drives u <-> e semiclassically, the cavity vacuum couples e <-> g.
// All Hamiltonians are returned divided by hbar, i.e. in rad/s.

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace vstirap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Physical parameters. Everything is stored in SI units (rad/s, m, m/s).
struct SystemParams {
    double g0;          // atom-cavity coupling at an antinode
    double kappa;       // cavity field decay rate; 2*kappa is the energy decay rate
    double gamma;       // population decay rate of e
    double branch_u;    // fraction of gamma decaying into u
    double branch_g;    // fraction of gamma decaying into g
    double branch_lost; // fraction of gamma leaving the modeled basis
    double omega0;      // peak pump Rabi frequency
    double w_c;         // cavity waist
    double w_p;         // pump waist
    double v;           // atomic velocity
    double delta_x;     // pump displacement downstream of the cavity axis
    double delta_p;     // pump detuning
    double delta_c;     // cavity detuning
    double lambda_opt;  // optical wavelength (standing-wave period is lambda/2)
    int n_max;          // photon-number truncation

    /// Experimental values: 2kappa = 2pi x 2.5 MHz, Gamma = 2pi x 6 MHz,
    /// g0 = 2pi x 4.5 MHz, Omega0 = 2pi x 30 MHz, w_C = 35 um, w_P = 50 um,
    /// v = 2 m/s, delta_x / v = 45 us, resonant, 85Rb D2 wavelength.
    static SystemParams defaults();

    /// Throws InvalidParameter on the first violated constraint.
    void validate() const;

    /// delta_x / v, the time between cavity and pump maxima.
    double delay() const { return delta_x / v; }
};

enum class Level : int { u = 0, e = 1, g = 2 };

struct BasisState {
    Level level;
    int photons;

    friend bool operator==(const BasisState&, const BasisState&) = default;
};

/// Product basis |level, n>. Photon-number blocks of the three atomic levels:
/// (u,0),(e,0),(g,0),(u,1),(e,1),(g,1),...
class Basis {
public:
    explicit Basis(int n_max);

    /// Recovers the basis from a matrix dimension D = 3 (n_max + 1).
    static Basis from_dim(std::size_t dim);

    int n_max() const { return n_max_; }
    std::size_t dim() const { return static_cast<std::size_t>(3 * (n_max_ + 1)); }

    std::size_t index(BasisState s) const;
    std::size_t index(Level level, int photons) const { return index(BasisState{level, photons}); }
    BasisState state(std::size_t index) const;

private:
    int n_max_;
};

const char* level_name(Level level);

/// Operators on the truncated space, as D x D matrices in Basis order.
struct OperatorSet {
    Basis basis;
    Matrix a;        // cavity annihilation
    Matrix a_dag;    // cavity creation
    Matrix proj_u;   // |u><u| (x) 1
    Matrix proj_e;   // |e><e| (x) 1
    Matrix proj_g;   // |g><g| (x) 1
    Matrix sigma_eg; // |e><g| (x) 1
    Matrix sigma_eu; // |e><u| (x) 1
    Matrix sigma_ge; // |g><e| (x) 1
    Matrix sigma_ue; // |u><e| (x) 1
    Matrix number;   // a_dag a

    explicit OperatorSet(const Basis& basis);
    std::size_t dim() const { return basis.dim(); }
};

/// H / hbar for instantaneous coupling g and pump Rabi frequency omega.
Matrix hamiltonian(const SystemParams& params, const OperatorSet& ops, double g, double omega);

/// The three pieces of H / hbar whose weights vary in time:
/// H = detuning + g * cavity + omega * pump.
struct HamiltonianParts {
    Matrix detuning;
    Matrix cavity;
    Matrix pump;
};
HamiltonianParts hamiltonian_parts(const SystemParams& params, const OperatorSet& ops);

/// Lindblad jump operators: cavity emission sqrt(2kappa) a, then spontaneous
/// decay e -> u and e -> g. A nonzero branch_lost adds a fourth channel that
/// is handled as pure loss (see lost_decay_generator).
std::vector<Matrix> collapse_operators(const SystemParams& params, const OperatorSet& ops);

/// Anti-Hermitian damping -(1/2) branch_lost * Gamma * P_e that removes
/// population from the modeled basis without a feeding term.
Matrix lost_decay_generator(const SystemParams& params, const OperatorSet& ops);

/// Lindblad generator applied to rho:
/// -i[H, rho] + sum_k (c rho c^+ - 1/2 {c^+ c, rho}) + loss.
Matrix lindblad_action(const Matrix& h, const std::vector<Matrix>& collapse, const Matrix& lost,
                       const Matrix& rho);

/// Dark state (2g|u,0> - omega|g,1>) / sqrt(4g^2 + omega^2).
/// Throws UndefinedState when g and omega are both zero.
Vector dark_state(const Basis& basis, double g, double omega);

} // namespace vstirap
