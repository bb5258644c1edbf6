// config.hpp: run configuration for the command-line tools.
//
// Values are kept in the units of the JSON document: frequencies in MHz
// (the angular rate is 2 pi times the value), lengths in um (wavelength in
// nm), times in us (integrator steps in ns), velocity in m/s.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vstirap/drive.hpp"
#include "vstirap/engine.hpp"
#include "vstirap/ensemble.hpp"
#include "vstirap/errors.hpp"
#include "vstirap/model.hpp"

#include "json.hpp"

namespace vstirap {

/// Evenly spaced grid including both ends.
struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 1;

    std::vector<double> values() const;
};

struct SystemSection {
    double g0_mhz = 4.5;
    double kappa_mhz = 1.25; // field decay; the cavity linewidth is 2 kappa = 2.5 MHz
    double gamma_mhz = 6.0;
    double branch_u = 0.5;
    double branch_g = 0.5;
    double branch_lost = 0.0;
    double omega0_mhz = 30.0;
    double w_c_um = 35.0;
    double w_p_um = 50.0;
    double v_m_s = 2.0;
    double delay_us = 45.0; // delta_x / v
    double delta_p_mhz = 0.0;
    double delta_c_mhz = 0.0;
    double lambda_nm = 780.24;
    int n_max = 1;
};

struct GeometrySection {
    double x_axial_um = 0.0;
    double y_transverse_um = 0.0;
};

struct IntegratorSection {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step_ns = 50.0;
    double span_cutoff = 1e-4;
    bool check_positivity = true;
};

struct SingleSection {
    double sample_interval_ns = 100.0;
};

struct SweepSection {
    GridSpec delays_us{-20.0, 80.0, 41};
    std::size_t axial_points = 64; // over [0, lambda/2)
    double axial_delay_us = 35.0;
    GridSpec delta_p_mhz{-20.0, 20.0, 41};
    GridSpec delta_c_mhz{-20.0, 20.0, 41};
    double map_delay_us = 35.0;
    double spectrum_delta_c_mhz = -15.0;
    GridSpec spectrum_delta_p_mhz{-27.0, -3.0, 49};
    double spectrum_delay_us = 35.0;
};

struct EnsembleSection {
    double slit_halfwidth_um = 50.0;
    double atom_rate_per_s = 12e3;
    int drops = 50;
    double record_window_us = 2600.0;
    double detection_efficiency = 0.40;
    double dark_count_rate_hz = 390.0;
    std::uint64_t seed = 20000821;
    std::size_t cache_nx = 33;
    std::size_t cache_ny = 17;
    std::size_t mc_samples = 200000;
    std::string axial_sampling = "uniform";      // uniform | antinode
    std::string transverse_sampling = "uniform"; // uniform | on_axis
    double generation_fwhm_us = 12.0;
    double delay_us = 35.0;
    double delta_c_mhz = -15.0;
    GridSpec delta_p_mhz{-27.0, -3.0, 25};
};

struct OutputSection {
    std::string dir = "out";
};

struct RunConfig {
    SystemSection system;
    GeometrySection geometry;
    IntegratorSection integrator;
    SingleSection single;
    SweepSection sweeps;
    EnsembleSection ensemble;
    OutputSection output;
    unsigned threads = 0; // 0 = hardware concurrency

    SystemParams system_params() const;
    GeometryOffsets geometry_offsets() const;
    IntegratorConfig integrator_config() const;
    EnsembleConfig ensemble_config() const;

    /// Runs every library-level validation; throws ConfigError naming the field.
    void validate() const;
};

/// Raised for malformed documents, unknown keys and wrong types. The message
/// names the line (syntax errors) or the dotted field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

nlohmann::ordered_json to_json(const RunConfig& config);

/// Parses a config document. A run manifest is accepted too; its
/// resolved_config member is used.
RunConfig config_from_text(std::string_view text, std::string_view origin = "<config>");
RunConfig config_from_file(const std::string& path);

/// Applies "dotted.key=value"; the value is parsed as JSON, falling back to
/// a plain string.
void apply_override(RunConfig& config, std::string_view assignment);

/// Directory searched for default.json when no --config is given
/// (VSTIRAP_CONFIG_DIR), empty if unset.
std::string default_config_dir();

} // namespace vstirap
