#include "vstirap/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vstirap/sweeps.hpp"
#include "vstirap/units.hpp"

namespace vstirap {

using Json = nlohmann::ordered_json;

std::vector<double> GridSpec::values() const { return linear_grid(start, stop, points); }

SystemParams RunConfig::system_params() const
{
    using namespace units;
    SystemParams p{};
    p.g0 = mhz_to_rad_s(system.g0_mhz);
    p.kappa = mhz_to_rad_s(system.kappa_mhz);
    p.gamma = mhz_to_rad_s(system.gamma_mhz);
    p.branch_u = system.branch_u;
    p.branch_g = system.branch_g;
    p.branch_lost = system.branch_lost;
    p.omega0 = mhz_to_rad_s(system.omega0_mhz);
    p.w_c = um(system.w_c_um);
    p.w_p = um(system.w_p_um);
    p.v = system.v_m_s;
    p.delta_x = us(system.delay_us) * system.v_m_s;
    p.delta_p = mhz_to_rad_s(system.delta_p_mhz);
    p.delta_c = mhz_to_rad_s(system.delta_c_mhz);
    p.lambda_opt = nm(system.lambda_nm);
    p.n_max = system.n_max;
    return p;
}

GeometryOffsets RunConfig::geometry_offsets() const
{
    return {units::um(geometry.x_axial_um), units::um(geometry.y_transverse_um)};
}

IntegratorConfig RunConfig::integrator_config() const
{
    IntegratorConfig c;
    c.rel_tol = integrator.rel_tol;
    c.abs_tol = integrator.abs_tol;
    c.max_step = units::ns(integrator.max_step_ns);
    c.span_cutoff = integrator.span_cutoff;
    c.check_positivity = integrator.check_positivity;
    return c;
}

namespace {

AxialSampling parse_axial(const std::string& s)
{
    if (s == "uniform")
        return AxialSampling::uniform;
    if (s == "antinode")
        return AxialSampling::antinode;
    throw ConfigError("ensemble.axial_sampling: expected \"uniform\" or \"antinode\", got \"" + s + "\"");
}

TransverseSampling parse_transverse(const std::string& s)
{
    if (s == "uniform")
        return TransverseSampling::uniform;
    if (s == "on_axis")
        return TransverseSampling::on_axis;
    throw ConfigError("ensemble.transverse_sampling: expected \"uniform\" or \"on_axis\", got \"" + s +
                      "\"");
}

} // namespace

EnsembleConfig RunConfig::ensemble_config() const
{
    EnsembleConfig c;
    c.slit_halfwidth = units::um(ensemble.slit_halfwidth_um);
    c.atom_rate = ensemble.atom_rate_per_s;
    c.drops = ensemble.drops;
    c.record_window = units::us(ensemble.record_window_us);
    c.detection_efficiency = ensemble.detection_efficiency;
    c.dark_count_rate = ensemble.dark_count_rate_hz;
    c.rng_seed = ensemble.seed;
    c.cache_nx = ensemble.cache_nx;
    c.cache_ny = ensemble.cache_ny;
    c.mc_samples = ensemble.mc_samples;
    c.axial = parse_axial(ensemble.axial_sampling);
    c.transverse = parse_transverse(ensemble.transverse_sampling);
    c.generation_fwhm = units::us(ensemble.generation_fwhm_us);
    return c;
}

void RunConfig::validate() const
{
    const Json doc = to_json(*this);
    // Library messages start with the parameter name; find the config key
    // carrying it (g0 -> g0_mhz, w_c -> w_c_um, ...).
    auto field = [&](const std::string& name, auto&& check) {
        try {
            check();
        } catch (const InvalidParameter& e) {
            const std::string msg = e.what();
            const std::string token = msg.substr(0, msg.find(' '));
            std::string path = name;
            if (token == "delta_x") {
                path += ".delay_us";
            } else {
                for (auto it = doc.at(name).begin(); it != doc.at(name).end(); ++it) {
                    if (it.key() == token || it.key().rfind(token + "_", 0) == 0) {
                        path += "." + it.key();
                        break;
                    }
                }
            }
            throw ConfigError(path + ": " + msg);
        }
    };
    field("system", [&] { system_params().validate(); });
    field("integrator", [&] { integrator_config().validate(); });
    field("ensemble", [&] { ensemble_config().validate(); });
    auto grid = [](const std::string& name, const GridSpec& g) {
        if (g.points == 0)
            throw ConfigError(name + ".points: must be >= 1");
        if (!std::isfinite(g.start) || !std::isfinite(g.stop))
            throw ConfigError(name + ": start and stop must be finite");
    };
    grid("sweeps.delays_us", sweeps.delays_us);
    grid("sweeps.delta_p_mhz", sweeps.delta_p_mhz);
    grid("sweeps.delta_c_mhz", sweeps.delta_c_mhz);
    grid("sweeps.spectrum_delta_p_mhz", sweeps.spectrum_delta_p_mhz);
    grid("ensemble.delta_p_mhz", ensemble.delta_p_mhz);
    if (sweeps.axial_points == 0)
        throw ConfigError("sweeps.axial_points: must be >= 1");
    if (!(single.sample_interval_ns > 0.0))
        throw ConfigError("single.sample_interval_ns: must be > 0");
    if (output.dir.empty())
        throw ConfigError("output.dir: must not be empty");
}

namespace {

Json grid_json(const GridSpec& g) { return Json{{"start", g.start}, {"stop", g.stop}, {"points", g.points}}; }

GridSpec grid_from(const Json& j)
{
    return {j.at("start").get<double>(), j.at("stop").get<double>(), j.at("points").get<std::size_t>()};
}

} // namespace

Json to_json(const RunConfig& c)
{
    const auto& s = c.system;
    const auto& e = c.ensemble;
    const auto& w = c.sweeps;
    Json j;
    j["system"] = {{"g0_mhz", s.g0_mhz},
                   {"kappa_mhz", s.kappa_mhz},
                   {"gamma_mhz", s.gamma_mhz},
                   {"branch_u", s.branch_u},
                   {"branch_g", s.branch_g},
                   {"branch_lost", s.branch_lost},
                   {"omega0_mhz", s.omega0_mhz},
                   {"w_c_um", s.w_c_um},
                   {"w_p_um", s.w_p_um},
                   {"v_m_s", s.v_m_s},
                   {"delay_us", s.delay_us},
                   {"delta_p_mhz", s.delta_p_mhz},
                   {"delta_c_mhz", s.delta_c_mhz},
                   {"lambda_nm", s.lambda_nm},
                   {"n_max", s.n_max}};
    j["geometry"] = {{"x_axial_um", c.geometry.x_axial_um}, {"y_transverse_um", c.geometry.y_transverse_um}};
    j["integrator"] = {{"rel_tol", c.integrator.rel_tol},
                       {"abs_tol", c.integrator.abs_tol},
                       {"max_step_ns", c.integrator.max_step_ns},
                       {"span_cutoff", c.integrator.span_cutoff},
                       {"check_positivity", c.integrator.check_positivity}};
    j["single"] = {{"sample_interval_ns", c.single.sample_interval_ns}};
    j["sweeps"] = {{"delays_us", grid_json(w.delays_us)},
                   {"axial_points", w.axial_points},
                   {"axial_delay_us", w.axial_delay_us},
                   {"delta_p_mhz", grid_json(w.delta_p_mhz)},
                   {"delta_c_mhz", grid_json(w.delta_c_mhz)},
                   {"map_delay_us", w.map_delay_us},
                   {"spectrum_delta_c_mhz", w.spectrum_delta_c_mhz},
                   {"spectrum_delta_p_mhz", grid_json(w.spectrum_delta_p_mhz)},
                   {"spectrum_delay_us", w.spectrum_delay_us}};
    j["ensemble"] = {{"slit_halfwidth_um", e.slit_halfwidth_um},
                     {"atom_rate_per_s", e.atom_rate_per_s},
                     {"drops", e.drops},
                     {"record_window_us", e.record_window_us},
                     {"detection_efficiency", e.detection_efficiency},
                     {"dark_count_rate_hz", e.dark_count_rate_hz},
                     {"seed", e.seed},
                     {"cache_nx", e.cache_nx},
                     {"cache_ny", e.cache_ny},
                     {"mc_samples", e.mc_samples},
                     {"axial_sampling", e.axial_sampling},
                     {"transverse_sampling", e.transverse_sampling},
                     {"generation_fwhm_us", e.generation_fwhm_us},
                     {"delay_us", e.delay_us},
                     {"delta_c_mhz", e.delta_c_mhz},
                     {"delta_p_mhz", grid_json(e.delta_p_mhz)}};
    j["output"] = {{"dir", c.output.dir}};
    j["threads"] = c.threads;
    return j;
}

namespace {

RunConfig decode(const Json& j)
{
    RunConfig c;
    auto& s = c.system;
    const Json& js = j.at("system");
    s.g0_mhz = js.at("g0_mhz");
    s.kappa_mhz = js.at("kappa_mhz");
    s.gamma_mhz = js.at("gamma_mhz");
    s.branch_u = js.at("branch_u");
    s.branch_g = js.at("branch_g");
    s.branch_lost = js.at("branch_lost");
    s.omega0_mhz = js.at("omega0_mhz");
    s.w_c_um = js.at("w_c_um");
    s.w_p_um = js.at("w_p_um");
    s.v_m_s = js.at("v_m_s");
    s.delay_us = js.at("delay_us");
    s.delta_p_mhz = js.at("delta_p_mhz");
    s.delta_c_mhz = js.at("delta_c_mhz");
    s.lambda_nm = js.at("lambda_nm");
    s.n_max = js.at("n_max");

    c.geometry.x_axial_um = j.at("geometry").at("x_axial_um");
    c.geometry.y_transverse_um = j.at("geometry").at("y_transverse_um");

    const Json& ji = j.at("integrator");
    c.integrator.rel_tol = ji.at("rel_tol");
    c.integrator.abs_tol = ji.at("abs_tol");
    c.integrator.max_step_ns = ji.at("max_step_ns");
    c.integrator.span_cutoff = ji.at("span_cutoff");
    c.integrator.check_positivity = ji.at("check_positivity");

    c.single.sample_interval_ns = j.at("single").at("sample_interval_ns");

    const Json& jw = j.at("sweeps");
    c.sweeps.delays_us = grid_from(jw.at("delays_us"));
    c.sweeps.axial_points = jw.at("axial_points");
    c.sweeps.axial_delay_us = jw.at("axial_delay_us");
    c.sweeps.delta_p_mhz = grid_from(jw.at("delta_p_mhz"));
    c.sweeps.delta_c_mhz = grid_from(jw.at("delta_c_mhz"));
    c.sweeps.map_delay_us = jw.at("map_delay_us");
    c.sweeps.spectrum_delta_c_mhz = jw.at("spectrum_delta_c_mhz");
    c.sweeps.spectrum_delta_p_mhz = grid_from(jw.at("spectrum_delta_p_mhz"));
    c.sweeps.spectrum_delay_us = jw.at("spectrum_delay_us");

    const Json& je = j.at("ensemble");
    auto& e = c.ensemble;
    e.slit_halfwidth_um = je.at("slit_halfwidth_um");
    e.atom_rate_per_s = je.at("atom_rate_per_s");
    e.drops = je.at("drops");
    e.record_window_us = je.at("record_window_us");
    e.detection_efficiency = je.at("detection_efficiency");
    e.dark_count_rate_hz = je.at("dark_count_rate_hz");
    e.seed = je.at("seed");
    e.cache_nx = je.at("cache_nx");
    e.cache_ny = je.at("cache_ny");
    e.mc_samples = je.at("mc_samples");
    e.axial_sampling = je.at("axial_sampling");
    e.transverse_sampling = je.at("transverse_sampling");
    e.generation_fwhm_us = je.at("generation_fwhm_us");
    e.delay_us = je.at("delay_us");
    e.delta_c_mhz = je.at("delta_c_mhz");
    e.delta_p_mhz = grid_from(je.at("delta_p_mhz"));

    c.output.dir = j.at("output").at("dir");
    c.threads = j.at("threads");
    return c;
}

// Maps dotted key paths to the 1-based line of their key in the source text.
// A small scanner; the document has already been validated by the parser.
std::map<std::string, int> key_lines(std::string_view text)
{
    std::map<std::string, int> out;
    std::vector<std::string> stack;   // path of the enclosing objects
    std::vector<bool> is_object;
    std::string pending;              // last string seen, a key if ':' follows
    bool have_pending = false;
    int pending_line = 1;
    int line = 1;
    std::string current_key;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (ch == '\n') {
            ++line;
        } else if (ch == '"') {
            std::string s;
            const int start_line = line;
            for (++i; i < text.size() && text[i] != '"'; ++i) {
                if (text[i] == '\\' && i + 1 < text.size())
                    ++i;
                if (text[i] == '\n')
                    ++line;
                s += text[i];
            }
            pending = s;
            have_pending = true;
            pending_line = start_line;
            continue;
        } else if (ch == ':' && have_pending && !is_object.empty() && is_object.back()) {
            std::string path;
            for (const auto& k : stack)
                path += k + ".";
            current_key = pending;
            out.emplace(path + pending, pending_line);
        } else if (ch == '{' || ch == '[') {
            if (!is_object.empty() && is_object.back())
                stack.push_back(current_key);
            else if (!is_object.empty())
                stack.push_back("[]");
            is_object.push_back(ch == '{');
        } else if (ch == '}' || ch == ']') {
            if (!is_object.empty())
                is_object.pop_back();
            if (!stack.empty() && !is_object.empty())
                stack.pop_back();
        }
        if (ch != ' ' && ch != '\t' && ch != '\r' && ch != '\n' && ch != ':')
            have_pending = false;
    }
    return out;
}

const char* kind(const Json& j)
{
    if (j.is_boolean())
        return "boolean";
    if (j.is_number_integer())
        return "integer";
    if (j.is_number())
        return "number";
    if (j.is_string())
        return "string";
    if (j.is_object())
        return "object";
    if (j.is_array())
        return "array";
    return "null";
}

// Copies `src` over the default tree `dst`, rejecting keys the default does
// not have and values of the wrong kind.
void merge(Json& dst, const Json& src, const std::string& path, const std::function<std::string(const std::string&)>& where)
{
    if (!src.is_object())
        throw ConfigError(where(path) + (path.empty() ? "document" : path) + ": expected an object, got " +
                          kind(src));
    for (auto it = src.begin(); it != src.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!dst.contains(it.key()))
            throw ConfigError(where(key) + key + ": unknown key");
        Json& target = dst[it.key()];
        const Json& value = it.value();
        if (target.is_object()) {
            merge(target, value, key, where);
            continue;
        }
        bool ok;
        if (target.is_boolean())
            ok = value.is_boolean();
        else if (target.is_number_unsigned())
            ok = value.is_number_unsigned() ||
                 (value.is_number_integer() && value.get<std::int64_t>() >= 0);
        else if (target.is_number_integer())
            ok = value.is_number_integer();
        else if (target.is_number())
            ok = value.is_number();
        else
            ok = value.is_string();
        if (!ok)
            throw ConfigError(where(key) + key + ": expected " +
                              (target.is_number_unsigned() ? "non-negative integer" : kind(target)) +
                              ", got " + kind(value));
        target = value;
    }
}

RunConfig from_document(const Json& doc, const std::map<std::string, int>& lines, std::string_view origin,
                        const std::string& prefix)
{
    auto where = [&](const std::string& path) -> std::string {
        const auto it = lines.find(prefix + path);
        std::string s(origin);
        if (it != lines.end())
            s += ":" + std::to_string(it->second);
        return s + ": ";
    };
    Json merged = to_json(RunConfig{});
    merge(merged, doc, "", where);
    RunConfig c = decode(merged);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        // Attach a line when the message starts with a known field path.
        const std::string msg = e.what();
        const std::string field = msg.substr(0, msg.find(':'));
        throw ConfigError(where(field) + msg);
    }
    return c;
}

} // namespace

RunConfig config_from_text(std::string_view text, std::string_view origin)
{
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        int line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON syntax error: " + e.what());
    }
    const auto lines = key_lines(text);
    if (doc.is_object() && doc.contains("resolved_config"))
        return from_document(doc.at("resolved_config"), lines, origin, "resolved_config.");
    return from_document(doc, lines, origin, "");
}

RunConfig config_from_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_text(ss.str(), path);
}

void apply_override(RunConfig& config, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("--set " + std::string(assignment) + ": expected dotted.key=value");
    const std::string path(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded())
        value = raw;

    // Build {"a": {"b": value}} and merge it like a document.
    Json patch = value;
    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string part; std::getline(ss, part, '.');)
        parts.push_back(part);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it)
        patch = Json{{*it, patch}};

    Json merged = to_json(config);
    merge(merged, patch, "", [](const std::string&) { return std::string("--set "); });
    RunConfig c = decode(merged);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("--set ") + e.what());
    }
    config = c;
}

std::string default_config_dir()
{
    const char* dir = std::getenv("VSTIRAP_CONFIG_DIR");
    return dir ? std::string(dir) : std::string{};
}

} // namespace vstirap
