#include "vstirap/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vstirap/errors.hpp"
#include "vstirap/model.hpp"
#include "vstirap/observables.hpp"
#include "vstirap/units.hpp"

namespace vstirap {

using Json = nlohmann::ordered_json;

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

// Grid labels carry the ulp noise of the unit conversions; 12 digits hide it.
std::string format_label(double x)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

// NaN becomes null so the document stays valid JSON.
Json number(double x)
{
    if (!std::isfinite(x))
        return nullptr;
    return x;
}

} // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const SystemParams& params,
                          const GeometryOffsets& geom)
{
    const Basis basis(params.n_max);
    out << "t_us,g_mhz,omega_mhz,emission_rate_per_us,acc_emit,acc_spont";
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        const BasisState s = basis.state(k);
        out << ",pop_" << level_name(s.level) << s.photons;
    }
    out << ",dark_fidelity\n";
    for (const DensityState& s : traj.snapshots) {
        const Envelopes env = envelopes(s.t, params, geom);
        double fidelity = std::numeric_limits<double>::quiet_NaN();
        try {
            fidelity = dark_state_fidelity(s, s.t, params, geom);
        } catch (const UndefinedState&) {
        }
        out << format_number(units::to_us(s.t)) << ',' << format_number(units::rad_s_to_mhz(env.g)) << ','
            << format_number(units::rad_s_to_mhz(env.omega)) << ','
            << format_number(photon_emission_rate(s, params) * 1e-6) << ',' << format_number(s.acc_emit)
            << ',' << format_number(s.acc_spont);
        for (double p : populations(s))
            out << ',' << format_number(p);
        out << ',' << format_number(fidelity) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const SweepResult& r)
{
    for (const SweepAxis& a : r.axes)
        out << a.name << '_' << a.unit << ',';
    out << r.quantity << ",converged,error\n";
    std::vector<std::size_t> idx(r.axes.size(), 0);
    for (std::size_t flat = 0; flat < r.size(); ++flat) {
        // Row-major: the last axis varies fastest.
        std::size_t rem = flat;
        for (std::size_t a = r.axes.size(); a-- > 0;) {
            idx[a] = rem % r.axes[a].values.size();
            rem /= r.axes[a].values.size();
        }
        for (std::size_t a = 0; a < r.axes.size(); ++a)
            out << format_label(r.axes[a].values[idx[a]]) << ',';
        out << format_number(r.values[flat]) << ',' << (r.converged[flat] ? 1 : 0) << ','
            << csv_field(r.errors[flat]) << '\n';
    }
}

void write_count_csv(std::ostream& out, const CountRecord& record)
{
    out << "bin,n_atoms,n_generated,n_detected,n_dark,total\n";
    for (std::size_t b = 0; b < record.bins.size(); ++b) {
        const CountBin& c = record.bins[b];
        out << b << ',' << c.n_atoms << ',' << c.n_generated << ',' << c.n_detected << ',' << c.n_dark << ','
            << c.total << '\n';
    }
}

Json params_json(const SystemParams& p)
{
    using namespace units;
    return Json{{"g0_mhz", rad_s_to_mhz(p.g0)},
                {"kappa_mhz", rad_s_to_mhz(p.kappa)},
                {"gamma_mhz", rad_s_to_mhz(p.gamma)},
                {"branch_u", p.branch_u},
                {"branch_g", p.branch_g},
                {"branch_lost", p.branch_lost},
                {"omega0_mhz", rad_s_to_mhz(p.omega0)},
                {"w_c_um", to_um(p.w_c)},
                {"w_p_um", to_um(p.w_p)},
                {"v_m_s", p.v},
                {"delay_us", to_us(p.delay())},
                {"delta_p_mhz", rad_s_to_mhz(p.delta_p)},
                {"delta_c_mhz", rad_s_to_mhz(p.delta_c)},
                {"lambda_nm", p.lambda_opt * 1e9},
                {"n_max", p.n_max}};
}

Json sweep_json(const SweepResult& r)
{
    Json axes = Json::array();
    for (const SweepAxis& a : r.axes)
        axes.push_back({{"name", a.name}, {"unit", a.unit}, {"values", a.values}});
    Json values = Json::array();
    for (double v : r.values)
        values.push_back(number(v));
    Json flags = Json::array();
    for (auto c : r.converged)
        flags.push_back(c != 0);
    Json errors = Json::array();
    for (std::size_t i = 0; i < r.size(); ++i)
        if (!r.converged[i])
            errors.push_back({{"index", i}, {"message", r.errors[i]}});
    return Json{{"quantity", r.quantity},
                {"axes", axes},
                {"values", values},
                {"converged", flags},
                {"all_converged", r.all_converged()},
                {"failures", errors},
                {"params", params_json(r.params)},
                {"geometry", {{"x_axial_um", units::to_um(r.geometry.x_axial)},
                              {"y_transverse_um", units::to_um(r.geometry.y_transverse)}}},
                {"integrator", {{"rel_tol", r.integrator.rel_tol},
                                {"abs_tol", r.integrator.abs_tol},
                                {"max_step_ns", r.integrator.max_step * 1e9},
                                {"span_cutoff", r.integrator.span_cutoff}}}};
}

Json fit_json(const LorentzianFit& f)
{
    return Json{{"converged", f.converged},
                {"center", number(f.center)},
                {"fwhm", number(f.fwhm)},
                {"amplitude", number(f.amplitude)},
                {"offset", number(f.offset)},
                {"residual_norm", number(f.residual_norm)},
                {"iterations", f.iterations},
                {"message", f.message}};
}

Json count_json(const CountRecord& record, const EnsembleConfig& config)
{
    Json bins = Json::array();
    for (std::size_t b = 0; b < record.bins.size(); ++b) {
        const CountBin& c = record.bins[b];
        bins.push_back({{"bin", b},
                        {"delta_p_mhz", units::rad_s_to_mhz(c.delta_p)},
                        {"n_atoms", c.n_atoms},
                        {"n_generated", c.n_generated},
                        {"n_detected", c.n_detected},
                        {"n_dark", c.n_dark},
                        {"total", c.total}});
    }
    return Json{{"delta_c_mhz", units::rad_s_to_mhz(record.delta_c)},
                {"observation_time_s", record.observation_time},
                {"seed", record.seed},
                {"flagged_cache_points", record.flagged_points},
                {"config", {{"slit_halfwidth_um", units::to_um(config.slit_halfwidth)},
                            {"atom_rate_per_s", config.atom_rate},
                            {"drops", config.drops},
                            {"record_window_s", config.record_window},
                            {"detection_efficiency", config.detection_efficiency},
                            {"dark_count_rate_hz", config.dark_count_rate},
                            {"cache_nx", config.cache_nx},
                            {"cache_ny", config.cache_ny}}},
                {"bins", bins}};
}

void write_file(const std::string& path, const std::string& text)
{
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path);
    out << text;
    if (!out)
        throw Error("write failed for " + path);
}

} // namespace vstirap
