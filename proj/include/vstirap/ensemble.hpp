// ensemble.hpp: many atoms falling through the slit and the cavity, plus the
// detection chain (single efficiency, Poissonian dark counts).
//
// Per-atom emission probabilities come from a cached grid of single-atom
// transits over (axial, transverse) position with bilinear interpolation.
// Random numbers are drawn from per-bin streams derived from one master seed,
// so a fixed seed gives bit-identical records regardless of thread count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vstirap/drive.hpp"
#include "vstirap/engine.hpp"
#include "vstirap/lorentzian.hpp"

namespace vstirap {

enum class AxialSampling { uniform, antinode };
enum class TransverseSampling { uniform, on_axis };

struct EnsembleConfig {
    double slit_halfwidth = 50e-6;      // m
    double atom_rate = 12e3;            // atoms/s crossing slit and pump
    int drops = 50;
    double record_window = 2.6e-3;      // s per drop
    double detection_efficiency = 0.40;
    double dark_count_rate = 390.0;     // Hz
    std::uint64_t rng_seed = 20000821;
    std::size_t cache_nx = 33;          // points over [0, lambda/4]
    std::size_t cache_ny = 17;          // points over [0, slit_halfwidth]
    std::size_t mc_samples = 200000;    // draws for mean_emission
    AxialSampling axial = AxialSampling::uniform;
    TransverseSampling transverse = TransverseSampling::uniform;
    double generation_fwhm = 12e-6;     // s, duration of one photon generation

    void validate() const;
    double observation_time() const { return drops * record_window; }
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);

/// Independent stream for sub-task `stream` of a master seed.
Rng derive_stream(std::uint64_t seed, std::uint64_t stream);

/// x uniform over one standing-wave period [0, lambda/2), y uniform over
/// [-slit, slit] (or pinned per the sampling modes).
GeometryOffsets sample_atom(Rng& rng, const EnsembleConfig& config, double lambda_opt);

/// p_emit on a (|x| folded to [0, lambda/4]) x (|y| in [0, slit]) grid.
class EmissionCache {
public:
    static EmissionCache build(const SystemParams& params, const EnsembleConfig& config,
                               const IntegratorConfig& integ, unsigned threads);

    /// Bilinear interpolation; flagged corners are left out of the weights.
    /// Returns NaN if all four corners are flagged.
    double lookup(const GeometryOffsets& geom) const;

    std::size_t nx() const { return xs_.size(); }
    std::size_t ny() const { return ys_.size(); }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    double value(std::size_t i, std::size_t j) const { return values_[i * ys_.size() + j]; }
    bool ok(std::size_t i, std::size_t j) const { return ok_[i * ys_.size() + j] != 0; }
    std::size_t flagged() const;
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    double lambda_ = 0.0;
    std::vector<double> xs_;
    std::vector<double> ys_;
    std::vector<double> values_;
    std::vector<std::uint8_t> ok_;
    std::vector<std::string> warnings_;
};

struct MeanEmission {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::size_t flagged_points = 0;
};

/// Monte Carlo average of p_emit over the atom position distribution.
MeanEmission mean_emission(const SystemParams& params, const EnsembleConfig& config, double delay,
                           const IntegratorConfig& integ = {}, unsigned threads = 0);
MeanEmission mean_emission(const EmissionCache& cache, const EnsembleConfig& config,
                           double lambda_opt);

/// atom_rate * generation_fwhm, the chance that a second atom is present
/// while one photon is generated.
double two_atom_overlap(double atom_rate, double generation_fwhm);

struct CountBin {
    double delta_p = 0.0; // rad/s
    std::uint64_t n_atoms = 0;
    std::uint64_t n_generated = 0;
    std::uint64_t n_detected = 0;
    std::uint64_t n_dark = 0;
    std::uint64_t total = 0;
};

struct CountRecord {
    std::vector<CountBin> bins;
    double delta_c = 0.0;          // rad/s
    double observation_time = 0.0; // s per bin
    std::uint64_t seed = 0;
    std::size_t flagged_points = 0;
};

/// Simulated detector counts per pump-detuning bin (rad/s).
CountRecord count_spectrum(const SystemParams& params, const EnsembleConfig& config,
                           std::span<const double> grid_p, double delta_c, double delay,
                           const IntegratorConfig& integ = {}, unsigned threads = 0);

/// Detector counts drawn for one bin given the per-atom emission lookup.
CountBin draw_bin(Rng& rng, const EmissionCache& cache, const EnsembleConfig& config,
                  double lambda_opt);

/// Lorentzian fit of total counts versus Delta_P in MHz.
LorentzianFit fit_spectrum(const CountRecord& record, const LorentzianFitOptions& options = {});

} // namespace vstirap
