// lorentzian.hpp: least-squares Lorentzian line-shape fit
//
//   f(x) = offset + amplitude * gamma^2 / ((x - center)^2 + gamma^2),  fwhm = 2 gamma

#pragma once

#include <span>
#include <string>

namespace vstirap {

struct LorentzianFit {
    double center = 0.0;
    double fwhm = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string message;

    double operator()(double x) const;
};

struct LorentzianFitOptions {
    int max_iterations = 500;
    // Converged when every gradient component, scaled by its column norm of
    // the Jacobian and the residual norm, is below this value.
    double gradient_tol = 1e-8;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) fit. Needs at least five points
/// and non-constant data; otherwise returns converged = false.
LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y,
                             const LorentzianFitOptions& options = {});

} // namespace vstirap
