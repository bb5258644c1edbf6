#include "vstirap/lorentzian.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

namespace vstirap {

double LorentzianFit::operator()(double x) const
{
    const double g = 0.5 * fwhm;
    const double dx = x - center;
    return offset + amplitude * g * g / (dx * dx + g * g);
}

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Parameter order: center, gamma, amplitude, offset.
double model(const Vec4& p, double x)
{
    const double dx = x - p(0);
    const double g2 = p(1) * p(1);
    return p(3) + p(2) * g2 / (dx * dx + g2);
}

Eigen::RowVector4d gradient(const Vec4& p, double x)
{
    const double dx = x - p(0);
    const double g = p(1);
    const double q = dx * dx + g * g;
    const double q2 = q * q;
    Eigen::RowVector4d j;
    j(0) = p(2) * g * g * 2.0 * dx / q2;
    j(1) = p(2) * 2.0 * g * dx * dx / q2;
    j(2) = g * g / q;
    j(3) = 1.0;
    return j;
}

double cost(const Vec4& p, std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = model(p, x[i]) - y[i];
        s += r * r;
    }
    return s;
}

// Half-prominence crossing walking from the peak towards `step` direction.
double crossing(std::span<const double> x, std::span<const double> y, std::size_t peak, int step,
                double level)
{
    auto i = static_cast<std::ptrdiff_t>(peak);
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    while (true) {
        const std::ptrdiff_t j = i + step;
        if (j < 0 || j >= n)
            return x[static_cast<std::size_t>(i)];
        const double yi = y[static_cast<std::size_t>(i)];
        const double yj = y[static_cast<std::size_t>(j)];
        if (yj < level) {
            const double f = (yi - level) / (yi - yj);
            return x[static_cast<std::size_t>(i)] +
                   f * (x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(i)]);
        }
        i = j;
    }
}

Vec4 initial_guess(std::span<const double> x, std::span<const double> y)
{
    // Lowest index wins ties.
    const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double lo = *std::min_element(y.begin(), y.end());
    const double hi = y[peak];
    const double level = lo + 0.5 * (hi - lo);
    const double left = crossing(x, y, peak, -1, level);
    const double right = crossing(x, y, peak, +1, level);
    double width = std::abs(right - left);
    if (!(width > 0.0)) {
        const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
        width = (*mx - *mn) / static_cast<double>(x.size());
    }
    return Vec4(x[peak], 0.5 * width, hi - lo, lo);
}

} // namespace

LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y,
                             const LorentzianFitOptions& options)
{
    LorentzianFit fit;
    if (x.size() != y.size()) {
        fit.message = "x and y lengths differ";
        return fit;
    }
    if (x.size() < 5) {
        fit.message = "need at least 5 points";
        return fit;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            fit.message = "non-finite data";
            return fit;
        }
    }
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    const double range = *ymax - *ymin;
    const double scale = std::max(std::abs(*ymax), std::abs(*ymin));
    if (!(range > 1e-12 * scale) || range == 0.0) {
        fit.message = "constant data";
        fit.offset = *ymin;
        fit.residual_norm = std::sqrt(cost(Vec4(0.0, 1.0, 0.0, *ymin), x, y));
        return fit;
    }

    const std::size_t n = x.size();
    Vec4 p = initial_guess(x, y);
    double c = cost(p, x, y);
    double mu = 1e-3;
    bool grad_ok = false;
    int it = 0;

    for (; it < options.max_iterations; ++it) {
        Mat4 jtj = Mat4::Zero();
        Vec4 jtr = Vec4::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::RowVector4d j = gradient(p, x[i]);
            const double r = model(p, x[i]) - y[i];
            jtj += j.transpose() * j;
            jtr += j.transpose() * r;
        }
        const double rnorm = std::sqrt(c);
        if (rnorm <= 1e-14 * std::sqrt(static_cast<double>(n)) * range) {
            grad_ok = true;
            break;
        }
        double worst = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double col = std::sqrt(jtj(k, k));
            if (col > 0.0)
                worst = std::max(worst, std::abs(jtr(k)) / (col * rnorm));
        }
        if (worst <= options.gradient_tol) {
            grad_ok = true;
            break;
        }

        bool improved = false;
        for (int tries = 0; tries < 60; ++tries) {
            Mat4 damped = jtj;
            for (int k = 0; k < 4; ++k)
                damped(k, k) += mu * std::max(jtj(k, k), 1e-300);
            const Vec4 delta = damped.ldlt().solve(-jtr);
            if (!delta.allFinite()) {
                mu *= 10.0;
                continue;
            }
            const Vec4 trial = p + delta;
            const double ct = cost(trial, x, y);
            if (std::isfinite(ct) && ct < c) {
                p = trial;
                c = ct;
                mu = std::max(mu / 3.0, 1e-12);
                improved = true;
                break;
            }
            mu *= 2.0;
        }
        if (!improved)
            break;
    }

    fit.center = p(0);
    fit.fwhm = 2.0 * std::abs(p(1));
    fit.amplitude = p(2);
    fit.offset = p(3);
    fit.residual_norm = std::sqrt(c);
    fit.iterations = it;

    if (!grad_ok) {
        fit.message = "gradient criterion not met";
        return fit;
    }
    if (!(std::abs(fit.amplitude) > 1e-9 * range) || !(fit.fwhm > 0.0) || !std::isfinite(fit.fwhm)) {
        fit.message = "degenerate line shape";
        return fit;
    }
    fit.converged = true;
    fit.message = "ok";
    return fit;
}

} // namespace vstirap
