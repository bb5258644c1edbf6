#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "vstirap/sweeps.hpp"
#include "vstirap/units.hpp"

using namespace vstirap;
using units::mhz_to_rad_s;

// Single-atom spectra at the antinode. The -15 MHz width is known to come out
// near 8 MHz; see the project notes.

namespace {

const SystemParams P = SystemParams::defaults();
constexpr double kDelay = 35e-6;

SweepResult spectrum(double delta_c_mhz)
{
    return pump_spectrum(P, mhz_to_rad_s(delta_c_mhz),
                         linear_grid(mhz_to_rad_s(delta_c_mhz - 12.0), mhz_to_rad_s(delta_c_mhz + 12.0), 49),
                         kDelay);
}

double peak_position(const SweepResult& r)
{
    const auto it = std::max_element(r.values.begin(), r.values.end());
    return r.axes[0].values[static_cast<std::size_t>(it - r.values.begin())];
}

} // namespace

TEST_CASE("spectrum at cavity detuning -15 MHz")
{
    const SweepResult r = spectrum(-15.0);
    REQUIRE(r.all_converged());
    CHECK(std::abs(peak_position(r) + 15.0) <= 1.0);
    const LorentzianFit f = lorentzian_fit(r);
    REQUIRE(f.converged);
    MESSAGE("center " << f.center << " MHz, fwhm " << f.fwhm << " MHz");
    CHECK(std::abs(f.center + 15.0) <= 1.0);
    CHECK(f.fwhm < 6.0);
    CHECK(std::abs(f.fwhm - 3.0) <= 1.0);
}

TEST_CASE("spectrum at cavity resonance")
{
    const SweepResult r = spectrum(0.0);
    REQUIRE(r.all_converged());
    CHECK(std::abs(peak_position(r)) <= 1.0);
    const LorentzianFit f = lorentzian_fit(r);
    REQUIRE(f.converged);
    MESSAGE("center " << f.center << " MHz, fwhm " << f.fwhm << " MHz");
    CHECK(f.fwhm < 6.0);
}
