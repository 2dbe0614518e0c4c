// Batch front door: configuration-driven simulation and verification.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "almech/verify.hpp"

using nlohmann::json;
using namespace almech;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeFailure = 3;

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

FDConfig fd_from_env() {
    FDConfig fd;
    if (const char* s = std::getenv("ALMECH_FD_STEP")) {
        char* end = nullptr;
        double v = std::strtod(s, &end);
        if (end == s || !(v > 0.0)) throw ConfigError("ALMECH_FD_STEP must be a positive number");
        fd.step_base = fd.step_fiber = v;
    }
    return fd;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct RunConfig {
    std::string system;
    std::map<std::string, double> parameters;
    State initial_state;
    bool has_initial_state = false;
    IntegratorConfig integrator;
    std::vector<std::string> checks;
    std::string trajectory_path;
    std::string report_path;
    uint64_t seed = 2024;
};

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    if (!j.contains("system") || !j["system"].is_string())
        throw ConfigError("config field 'system' (string) is required");
    cfg.system = j["system"].get<std::string>();
    if (!systems::known_system(cfg.system))
        throw ConfigError("unknown system '" + cfg.system + "' in field 'system'");
    if (j.contains("parameters")) {
        if (!j["parameters"].is_object()) throw ConfigError("field 'parameters' must be an object");
        for (auto& [k, v] : j["parameters"].items()) {
            if (!v.is_number()) throw ConfigError("parameter '" + k + "' must be numeric");
            cfg.parameters[k] = v.get<double>();
        }
    }
    if (j.contains("initial_state")) {
        const auto& s = j["initial_state"];
        if (!s.is_object() || !s.contains("x") || !s.contains("y"))
            throw ConfigError("field 'initial_state' must carry arrays 'x' and 'y'");
        auto to_vec = [](const json& arr, const char* name) {
            if (!arr.is_array()) throw ConfigError(std::string("initial_state.") + name + " must be an array");
            Vec v(arr.size());
            for (size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
            return v;
        };
        cfg.initial_state.x = to_vec(s["x"], "x");
        cfg.initial_state.y = to_vec(s["y"], "y");
        cfg.has_initial_state = true;
    }
    if (j.contains("integrator")) {
        const auto& ji = j["integrator"];
        if (ji.contains("method")) {
            std::string m = ji["method"].get<std::string>();
            if (m == "rk4")
                cfg.integrator.method = RKMethod::rk4;
            else if (m == "rk4_halving")
                cfg.integrator.method = RKMethod::rk4_halving;
            else
                throw ConfigError("integrator.method must be 'rk4' or 'rk4_halving'");
        }
        if (ji.contains("step")) cfg.integrator.step = ji["step"].get<double>();
        if (ji.contains("horizon")) cfg.integrator.horizon = ji["horizon"].get<double>();
        if (ji.contains("sample_every")) cfg.integrator.sample_every = ji["sample_every"].get<int>();
        if (ji.contains("post_step_projection"))
            cfg.integrator.post_step_projection = ji["post_step_projection"].get<bool>();
        if (ji.contains("projection_tol"))
            cfg.integrator.projection_tol = ji["projection_tol"].get<double>();
        try {
            cfg.integrator.validate();
        } catch (const InvalidParameters& e) {
            throw ConfigError(std::string("integrator: ") + e.what());
        }
    }
    if (j.contains("checks")) {
        for (const auto& c : j["checks"]) cfg.checks.push_back(c.get<std::string>());
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("output")) {
        const auto& jo = j["output"];
        if (jo.contains("trajectory")) cfg.trajectory_path = jo["trajectory"].get<std::string>();
        if (jo.contains("report")) cfg.report_path = jo["report"].get<std::string>();
    }
    if (cfg.checks.empty() && cfg.trajectory_path.empty())
        throw ConfigError("config requests neither checks nor a trajectory output");
    for (const auto& c : cfg.checks) {
        static const std::vector<std::string> names = {
            "structure_equations", "regularity_sweep", "route_equivalence", "energy",
            "noether",             "momentum",         "bracket_table",     "reduction",
            "chaplygin",           "oracle_match"};
        if (std::find(names.begin(), names.end(), c) == names.end())
            throw ConfigError("unknown check '" + c + "' in field 'checks'");
    }
    return cfg;
}

void write_trajectory_csv(const std::string& path, const systems::SystemDescriptor& desc,
                          const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open trajectory output '" + path + "'");
    out << "# almech trajectory, system=" << desc.name << ", generated " << iso_timestamp() << "\n";
    out << "t";
    for (const auto& l : desc.chart->x_labels) out << "," << l;
    for (const auto& l : desc.chart->y_labels) out << "," << l;
    for (const auto& [name, series] : traj.monitors) out << "," << name;
    out << "\n";
    for (size_t i = 0; i < traj.size(); ++i) {
        out << fmt(traj.times[i]);
        for (int k = 0; k < traj.states[i].x.size(); ++k) out << "," << fmt(traj.states[i].x[k]);
        for (int k = 0; k < traj.states[i].y.size(); ++k) out << "," << fmt(traj.states[i].y[k]);
        for (const auto& [name, series] : traj.monitors) out << "," << fmt(series[i]);
        out << "\n";
    }
}

json report_json(const systems::SystemDescriptor& desc,
                 const std::vector<verify::CheckResult>& results) {
    json checks = json::array();
    for (const auto& r : results) {
        json c;
        c["name"] = r.name;
        c["measured"] = r.measured;
        c["tolerance"] = r.tolerance;
        c["pass"] = r.pass;
        if (!r.detail.empty()) c["detail"] = r.detail;
        checks.push_back(c);
    }
    json out;
    out["timestamp"] = iso_timestamp();
    out["system"] = desc.name;
    out["parameters"] = desc.params;
    out["checks"] = checks;
    return out;
}

int cmd_run(const std::string& config_path) {
    RunConfig cfg;
    systems::SystemDescriptor desc;
    try {
        cfg = parse_config(config_path);
        desc = systems::build(cfg.system, cfg.parameters, fd_from_env());
        if (cfg.has_initial_state) {
            if (cfg.initial_state.x.size() != desc.chart->n ||
                cfg.initial_state.y.size() != desc.chart->m)
                throw ConfigError("initial_state dimensions do not match the system chart");
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const InvalidParameters& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        State start = cfg.has_initial_state ? cfg.initial_state : desc.default_state;
        std::vector<verify::CheckResult> results = verify::run_checks(desc, cfg.checks, cfg.seed);
        if (!cfg.trajectory_path.empty()) {
            const LagrangianField* L = &desc.L;
            std::map<std::string, MonitorFn> mons{
                {"E", [L](double, const State& s) { return energy(*L, s); }}};
            IntegratorConfig icfg = cfg.integrator;
            Trajectory traj = desc.is_linear()
                                  ? integrate_constrained(*desc.linear, start, icfg, mons)
                                  : integrate_constrained(*desc.nonlinear, start, icfg, mons);
            write_trajectory_csv(cfg.trajectory_path, desc, traj);
        }
        bool all_pass = true;
        for (const auto& r : results) {
            all_pass = all_pass && r.pass;
            std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  measured=" << fmt(r.measured)
                      << " tolerance=" << fmt(r.tolerance);
            if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
            std::cout << "\n";
        }
        if (!cfg.report_path.empty()) {
            std::ofstream out(cfg.report_path, std::ios::binary);
            if (!out) throw Error("cannot open report output '" + cfg.report_path + "'");
            out << std::setw(2) << report_json(desc, results) << "\n";
        }
        return all_pass ? kExitOk : kExitCheckFailure;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return kExitRuntimeFailure;
    }
}

int cmd_list(bool as_json) {
    if (as_json) {
        json arr = json::array();
        for (const auto& name : systems::system_names()) {
            auto d = systems::build(name);
            json e;
            e["name"] = name;
            e["parameters"] = d.params;
            e["checks"] = d.checks;
            e["base_dim"] = d.chart->n;
            e["fiber_rank"] = d.chart->m;
            e["constraint_type"] = d.is_linear() ? "linear" : "nonlinear";
            arr.push_back(e);
        }
        std::cout << std::setw(2) << arr << "\n";
        return kExitOk;
    }
    for (const auto& name : systems::system_names()) {
        auto d = systems::build(name);
        std::cout << name << "  (base dim " << d.chart->n << ", fiber rank " << d.chart->m << ", "
                  << (d.is_linear() ? "linear" : "nonlinear") << " constraints)\n";
        std::cout << "  parameters:";
        for (const auto& [k, v] : d.params) std::cout << " " << k << "=" << v;
        std::cout << "\n  checks:";
        for (const auto& c : d.checks) std::cout << " " << c;
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_verify(const std::string& system, std::vector<std::string> checks, uint64_t seed) {
    systems::SystemDescriptor desc;
    try {
        desc = systems::build(system, {}, fd_from_env());
        if (checks.empty()) checks = desc.checks;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        auto results = verify::run_checks(desc, checks, seed);
        bool all = true;
        for (const auto& r : results) {
            all = all && r.pass;
            std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  measured=" << fmt(r.measured)
                      << " tolerance=" << fmt(r.tolerance);
            if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
            std::cout << "\n";
        }
        return all ? kExitOk : kExitCheckFailure;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return kExitRuntimeFailure;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"almech: constrained mechanics on algebroid charts"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a JSON config (simulation and checks)");
    run->add_option("config", config_path, "path to the JSON configuration")->required();

    bool list_json = false;
    auto* ls = app.add_subcommand("list-systems", "list built-in systems");
    ls->add_flag("--json", list_json, "machine-readable output");

    std::string system;
    std::vector<std::string> checks;
    uint64_t seed = 2024;
    auto* ver = app.add_subcommand("verify", "run named verification checks on a built-in system");
    ver->add_option("system", system, "system name")->required();
    ver->add_option("--check", checks, "check name (repeatable; defaults to all)");
    ver->add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    if (run->parsed()) return cmd_run(config_path);
    if (ls->parsed()) return cmd_list(list_json);
    if (ver->parsed()) return cmd_verify(system, checks, seed);
    return kExitConfigError;
}
