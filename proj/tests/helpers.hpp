// helpers.hpp: shared fixtures for the unit tests
#pragma once

#include <random>

#include "vstirap/model.hpp"

namespace vstirap::testing {

// Random Hermitian, positive, unit-trace matrix of size d.
inline Matrix random_density(std::mt19937_64& rng, Eigen::Index d)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            a(i, j) = Complex(n(rng), n(rng));
    Matrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

// Random Hermitian unit-trace matrix, not necessarily positive.
inline Matrix random_hermitian(std::mt19937_64& rng, Eigen::Index d)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            a(i, j) = Complex(n(rng), n(rng));
    Matrix h = 0.5 * (a + a.adjoint());
    h.diagonal() -= Vector::Constant(d, (h.trace().real() - 1.0) / static_cast<double>(d));
    return h;
}

inline Matrix projector(const Basis& b, Level l, int n)
{
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(b.dim()), static_cast<Eigen::Index>(b.dim()));
    const auto k = static_cast<Eigen::Index>(b.index(l, n));
    p(k, k) = 1.0;
    return p;
}

} // namespace vstirap::testing
