// io.hpp: CSV and JSON writers for trajectories, sweeps and count records.
// Column orders are listed in docs/FORMATS.md.

#pragma once

#include <ostream>
#include <string>

#include "vstirap/ensemble.hpp"
#include "vstirap/lorentzian.hpp"
#include "vstirap/sweeps.hpp"

#include "json.hpp"

namespace vstirap {

/// Shortest decimal that reads back to the same double; "nan" for NaN.
std::string format_number(double x);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const SystemParams& params,
                          const GeometryOffsets& geom);
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_count_csv(std::ostream& out, const CountRecord& record);

nlohmann::ordered_json params_json(const SystemParams& params);
nlohmann::ordered_json sweep_json(const SweepResult& result);
nlohmann::ordered_json fit_json(const LorentzianFit& fit);
nlohmann::ordered_json count_json(const CountRecord& record, const EnsembleConfig& config);

/// Writes text to path, creating parent directories. Throws Error on failure.
void write_file(const std::string& path, const std::string& text);

} // namespace vstirap
