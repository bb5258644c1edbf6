// vstirap: command-line front end. One subcommand per experiment; every
// run writes its data files plus <subcommand>.manifest.json into the output
// directory. Exit status: 0 all points converged, 1 some failed, 2 bad input.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "json.hpp"
#include "vstirap/config.hpp"
#include "vstirap/ensemble.hpp"
#include "vstirap/io.hpp"
#include "vstirap/observables.hpp"
#include "vstirap/sweeps.hpp"
#include "vstirap/units.hpp"

#ifndef VSTIRAP_VERSION
#define VSTIRAP_VERSION "0.0.0"
#endif

using namespace vstirap;
using Json = nlohmann::ordered_json;

namespace {

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    int threads = -1;
    std::string out_dir;
    double delay_us = std::numeric_limits<double>::quiet_NaN();
    bool print_config = false;
};

struct Outcome {
    bool all_converged = true;
    Json summary = Json::object();
    std::vector<std::string> files;
    std::vector<std::string> failures;
};

std::string utc_now()
{
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

RunConfig resolve_config(const Options& opt)
{
    RunConfig cfg;
    if (!opt.config_path.empty()) {
        cfg = config_from_file(opt.config_path);
    } else if (const std::string dir = default_config_dir(); !dir.empty()) {
        const std::string path = (std::filesystem::path(dir) / "default.json").string();
        if (std::filesystem::exists(path))
            cfg = config_from_file(path);
    }
    for (const std::string& s : opt.overrides)
        apply_override(cfg, s);
    if (opt.threads >= 0)
        cfg.threads = static_cast<unsigned>(opt.threads);
    if (!opt.out_dir.empty())
        cfg.output.dir = opt.out_dir;
    return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name)
{
    return (std::filesystem::path(cfg.output.dir) / name).string();
}

void save(Outcome& o, const RunConfig& cfg, const std::string& name, const std::string& text)
{
    const std::string path = out_path(cfg, name);
    write_file(path, text);
    o.files.push_back(path);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

SweepOptions sweep_options(const RunConfig& cfg)
{
    SweepOptions o;
    o.integ = cfg.integrator_config();
    o.integ.snapshot_stride = 0;
    o.threads = cfg.threads;
    return o;
}

void collect(Outcome& o, const SweepResult& r)
{
    o.all_converged = r.all_converged();
    for (std::size_t i = 0; i < r.size(); ++i)
        if (!r.converged[i])
            o.failures.push_back("point " + std::to_string(i) + ": " + r.errors[i]);
}

std::vector<double> mhz_grid(const GridSpec& g)
{
    std::vector<double> v = g.values();
    for (double& x : v)
        x = units::mhz_to_rad_s(x);
    return v;
}

Outcome run_single(const RunConfig& cfg)
{
    Outcome o;
    const SystemParams p = cfg.system_params();
    const GeometryOffsets geom = cfg.geometry_offsets();
    IntegratorConfig integ = cfg.integrator_config();
    integ.sample_interval = units::ns(cfg.single.sample_interval_ns);
    const Trajectory traj = propagate(p, geom, integ);

    std::ostringstream csv;
    write_trajectory_csv(csv, traj, p, geom);
    save(o, cfg, "single.csv", csv.str());

    o.summary = {{"p_emit", traj.summary.p_emit},
                 {"p_spont", traj.summary.p_spont},
                 {"p_emit_trapezoid", integrated_emission(traj, p)},
                 {"final_populations", traj.summary.populations},
                 {"accepted_steps", traj.accepted_steps},
                 {"rejected_steps", traj.rejected_steps},
                 {"snapshots", traj.snapshots.size()}};
    save(o, cfg, "single.json", dump(o.summary));
    std::printf("p_emit %.6f  p_spont %.6f  (%zu steps)\n", traj.summary.p_emit, traj.summary.p_spont,
                traj.accepted_steps);
    return o;
}

Outcome write_sweep(const RunConfig& cfg, const std::string& stem, const SweepResult& r, Json extra = {})
{
    Outcome o;
    collect(o, r);
    std::ostringstream csv;
    write_sweep_csv(csv, r);
    save(o, cfg, stem + ".csv", csv.str());
    Json j = sweep_json(r);
    if (!extra.is_null())
        for (auto it = extra.begin(); it != extra.end(); ++it)
            j[it.key()] = it.value();
    save(o, cfg, stem + ".json", dump(j));
    o.summary = extra.is_null() ? Json::object() : extra;
    o.summary["points"] = r.size();
    o.summary["failed_points"] = o.failures.size();
    return o;
}

std::size_t argmax(const std::vector<double>& v)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best] || std::isnan(v[best]))
            best = i;
    return best;
}

Outcome run_scan_delay(const RunConfig& cfg)
{
    std::vector<double> delays = cfg.sweeps.delays_us.values();
    for (double& d : delays)
        d = units::us(d);
    const SweepResult r = delay_scan(cfg.system_params(), delays, sweep_options(cfg));
    const std::size_t k = argmax(r.values);
    std::printf("peak p_emit %.4f at delay %.2f us\n", r.values[k], r.axes[0].values[k]);
    return write_sweep(cfg, "scan_delay", r, {{"peak_delay_us", r.axes[0].values[k]}, {"peak_p_emit", r.values[k]}});
}

Outcome run_scan_axial(const RunConfig& cfg)
{
    const SystemParams p = cfg.system_params();
    const auto positions = default_axial_positions(p.lambda_opt, cfg.sweeps.axial_points);
    const SweepResult r = axial_scan(p, positions, units::us(cfg.sweeps.axial_delay_us), sweep_options(cfg));
    const std::size_t k = argmax(r.values);
    std::printf("max p_emit %.4f at x %.4f um\n", r.values[k], r.axes[0].values[k]);
    return write_sweep(cfg, "scan_axial", r, {{"max_p_emit", r.values[k]}, {"max_x_um", r.axes[0].values[k]}});
}

Outcome run_map(const RunConfig& cfg)
{
    const SweepResult r = detuning_map(cfg.system_params(), mhz_grid(cfg.sweeps.delta_p_mhz),
                                       mhz_grid(cfg.sweeps.delta_c_mhz), units::us(cfg.sweeps.map_delay_us),
                                       sweep_options(cfg));
    std::printf("%zu x %zu map done\n", r.axes[0].values.size(), r.axes[1].values.size());
    return write_sweep(cfg, "map_detuning", r);
}

Outcome run_spectrum(const RunConfig& cfg)
{
    const SweepResult r =
        pump_spectrum(cfg.system_params(), units::mhz_to_rad_s(cfg.sweeps.spectrum_delta_c_mhz),
                      mhz_grid(cfg.sweeps.spectrum_delta_p_mhz), units::us(cfg.sweeps.spectrum_delay_us),
                      sweep_options(cfg));
    const LorentzianFit fit = lorentzian_fit(r);
    if (fit.converged)
        std::printf("fit center %.3f MHz  fwhm %.3f MHz\n", fit.center, fit.fwhm);
    else
        std::printf("fit did not converge: %s\n", fit.message.c_str());
    return write_sweep(cfg, "spectrum", r, {{"fit", fit_json(fit)}});
}

Outcome run_ensemble(const RunConfig& cfg)
{
    Outcome o;
    const SystemParams p = cfg.system_params();
    const EnsembleConfig ec = cfg.ensemble_config();
    IntegratorConfig integ = cfg.integrator_config();
    integ.snapshot_stride = 0;
    const double delay = units::us(cfg.ensemble.delay_us);

    const MeanEmission mean = mean_emission(p, ec, delay, integ, cfg.threads);
    std::printf("mean emission %.4f +- %.4f (%zu flagged cache points)\n", mean.mean, mean.std_error,
                mean.flagged_points);

    const std::vector<double> grid = mhz_grid(cfg.ensemble.delta_p_mhz);
    const CountRecord rec =
        count_spectrum(p, ec, grid, units::mhz_to_rad_s(cfg.ensemble.delta_c_mhz), delay, integ, cfg.threads);
    const LorentzianFit fit = fit_spectrum(rec);
    if (fit.converged)
        std::printf("count fit center %.3f MHz  fwhm %.3f MHz\n", fit.center, fit.fwhm);
    else
        std::printf("count fit did not converge: %s\n", fit.message.c_str());

    std::ostringstream csv;
    write_count_csv(csv, rec);
    save(o, cfg, "ensemble.csv", csv.str());

    Json j = count_json(rec, ec);
    j["fit"] = fit_json(fit);
    j["mean_emission"] = {{"mean", mean.mean},
                          {"std_error", mean.std_error},
                          {"samples", mean.samples},
                          {"flagged_points", mean.flagged_points}};
    j["two_atom_overlap"] = two_atom_overlap(ec.atom_rate, ec.generation_fwhm);
    j["expected_dark_counts"] = ec.dark_count_rate * ec.observation_time();
    save(o, cfg, "ensemble.json", dump(j));

    o.all_converged = rec.flagged_points == 0 && mean.flagged_points == 0;
    if (!o.all_converged)
        o.failures.push_back(std::to_string(rec.flagged_points + mean.flagged_points) +
                             " cache points failed to integrate");
    o.summary = {{"mean_emission", mean.mean},
                 {"fit_center_mhz", fit.converged ? Json(fit.center) : Json(nullptr)},
                 {"fit_fwhm_mhz", fit.converged ? Json(fit.fwhm) : Json(nullptr)}};
    return o;
}

Outcome run_check(const RunConfig& cfg)
{
    Outcome o;
    const SystemParams p = cfg.system_params();
    const EnsembleConfig ec = cfg.ensemble_config();
    const Feasibility f = feasibility(p);
    const TimeSpan span = interaction_span(p, cfg.integrator.span_cutoff);
    std::printf("raman_ok           %s\n", f.raman_ok ? "yes" : "no");
    std::printf("adiabatic cavity   %.4g  (2 g0 w_C / v)\n", f.adiabatic_cavity);
    std::printf("adiabatic pump     %.4g  (Omega0 w_P / v)\n", f.adiabatic_pump);
    std::printf("interaction time   %.4g us\n", units::to_us(f.interaction_time));
    std::printf("cavity lifetime    %.4g us\n", units::to_us(f.cavity_lifetime));
    std::printf("emission_time_ok   %s\n", f.emission_time_ok ? "yes" : "no");
    std::printf("integration span   [%.4g, %.4g] us\n", units::to_us(span.start), units::to_us(span.end));
    std::printf("two-atom overlap   %.4g\n", two_atom_overlap(ec.atom_rate, ec.generation_fwhm));
    std::printf("dark counts        %.4g per %.4g s\n", ec.dark_count_rate * ec.observation_time(),
                ec.observation_time());
    o.summary = {{"raman_ok", f.raman_ok},
                 {"adiabatic_cavity", f.adiabatic_cavity},
                 {"adiabatic_pump", f.adiabatic_pump},
                 {"interaction_time_us", units::to_us(f.interaction_time)},
                 {"cavity_lifetime_us", std::isfinite(f.cavity_lifetime) ? Json(units::to_us(f.cavity_lifetime))
                                                                         : Json(nullptr)},
                 {"emission_time_ok", f.emission_time_ok},
                 {"span_start_us", units::to_us(span.start)},
                 {"span_end_us", units::to_us(span.end)},
                 {"two_atom_overlap", two_atom_overlap(ec.atom_rate, ec.generation_fwhm)},
                 {"expected_dark_counts", ec.dark_count_rate * ec.observation_time()}};
    save(o, cfg, "check.json", dump(o.summary));
    return o;
}

void apply_delay(RunConfig& cfg, const std::string& sub, double delay_us)
{
    if (std::isnan(delay_us))
        return;
    if (sub == "scan-axial")
        cfg.sweeps.axial_delay_us = delay_us;
    else if (sub == "map-detuning")
        cfg.sweeps.map_delay_us = delay_us;
    else if (sub == "spectrum")
        cfg.sweeps.spectrum_delay_us = delay_us;
    else if (sub == "ensemble")
        cfg.ensemble.delay_us = delay_us;
    else
        cfg.system.delay_us = delay_us;
    cfg.validate();
}

int execute(const std::string& sub, const Options& opt, const std::vector<std::string>& argv)
{
    RunConfig cfg;
    try {
        cfg = resolve_config(opt);
        apply_delay(cfg, sub, opt.delay_us);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    if (opt.print_config) {
        std::cout << dump(to_json(cfg));
        return 0;
    }

    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    std::string failure;
    try {
        if (sub == "single")
            out = run_single(cfg);
        else if (sub == "scan-delay")
            out = run_scan_delay(cfg);
        else if (sub == "scan-axial")
            out = run_scan_axial(cfg);
        else if (sub == "map-detuning")
            out = run_map(cfg);
        else if (sub == "spectrum")
            out = run_spectrum(cfg);
        else if (sub == "ensemble")
            out = run_ensemble(cfg);
        else
            out = run_check(cfg);
    } catch (const Error& e) {
        failure = e.what();
        out.all_converged = false;
        out.failures.push_back(failure);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    char eigen_version[32];
    std::snprintf(eigen_version, sizeof eigen_version, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                  EIGEN_MINOR_VERSION);
    Json manifest = {{"subcommand", sub},
                     {"arguments", argv},
                     {"resolved_config", to_json(cfg)},
                     {"seed", cfg.ensemble.seed},
                     {"versions", {{"vstirap", VSTIRAP_VERSION},
                                   {"eigen", eigen_version},
                                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                                   {"compiler", __VERSION__}}},
                     {"started_utc", started},
                     {"wall_time_s", wall},
                     {"status", failure.empty() ? (out.all_converged ? "ok" : "partial") : "failed"},
                     {"all_converged", out.all_converged},
                     {"failures", out.failures},
                     {"outputs", out.files},
                     {"summary", out.summary}};
    try {
        write_file(out_path(cfg, sub + ".manifest.json"), dump(manifest));
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    if (!failure.empty())
        std::fprintf(stderr, "error: %s\n", failure.c_str());
    else if (!out.all_converged)
        std::fprintf(stderr, "warning: %zu point(s) failed; see the manifest\n", out.failures.size());
    return out.all_converged ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Vacuum-stimulated Raman emission of single photons from atoms crossing a cavity"};
    app.require_subcommand(1);
    Options opt;

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"single", "one transit: time series of rate, populations and dark-state fidelity"},
        {"scan-delay", "emission probability versus pump delay"},
        {"scan-axial", "emission probability versus position along the cavity axis"},
        {"map-detuning", "emission probability over pump and cavity detuning"},
        {"spectrum", "single-atom pump spectrum at fixed cavity detuning, with Lorentzian fit"},
        {"ensemble", "Monte Carlo count spectrum with detection and dark counts"},
        {"check", "adiabaticity and timing diagnostics, no simulation"},
    };
    for (const auto& [name, help] : subs) {
        CLI::App* sc = app.add_subcommand(name, help);
        sc->add_option("-c,--config", opt.config_path, "JSON config or run manifest")->check(CLI::ExistingFile);
        sc->add_option("--set", opt.overrides, "override a config value, e.g. system.delta_c_mhz=-15");
        sc->add_option("--threads", opt.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
        sc->add_option("-o,--out", opt.out_dir, "output directory");
        sc->add_option("--delay-us", opt.delay_us, "pump delay in us for this subcommand");
        sc->add_flag("--print-config", opt.print_config, "print the resolved config and exit");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    return execute(app.get_subcommands().front()->get_name(), opt, args);
}
