#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/homogeneous.hpp"
#include "pcflab/initial_data.hpp"

namespace pcflab {

// Experiment configuration: one structured key-value file per experiment.
// Lines are `key = value` with dotted keys; `#` starts a comment. Unknown keys
// are rejected with the line number. Every run is reproducible from the file
// plus the seed; the only environment override is the output directory.

enum class DomainType { Torus, Algebra };

enum class InitialType { Flat, AlphaModes, Snapshot, Metric };

struct MetricEntry {
    int i = 0, j = 0;
    cplx value;
};

struct ExperimentConfig {
    DomainType domain = DomainType::Torus;
    int n = 2;
    int N = 12;
    std::string catalog_path;

    InitialType initial = InitialType::Flat;
    std::vector<AlphaMode> modes;
    std::string snapshot_path;
    std::vector<MetricEntry> metric_entries; ///< constant metric (algebra runs)

    // integrator
    double dt0 = 0.0; ///< 0 = CFL-determined
    double safety = 0.2;
    double t_max = 2.0;
    double stop_tol = 1e-6;
    bool adaptive = true;
    int max_steps = 500000;
    double wall_cap_s = 0.0;

    // monitors
    int cadence = 5;
    bool suite_max_principle = true;
    bool suite_identities = false;
    bool suite_upsilon = false;
    bool halt_on_violation = false;
    double tol_base = 1e-7;
    std::string mutate_q_sign; ///< test hook: "", "covariant", "contravariant"

    // output
    std::string out_dir = "out";
    bool write_csv = true;
    bool write_json = true;
    bool write_snapshot_file = true;

    // homogeneous
    OdeConfig ode;
    ScanConfig scan;

    std::uint64_t seed = 0;

    std::string source_path;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected boolean, got '" + v + "'", line);
}

inline double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError("expected number, got '" + v + "'", line);
    }
}

inline int parse_int(const std::string& v, int line) {
    try {
        std::size_t pos;
        long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return int(d);
    } catch (...) {
        throw ConfigError("expected integer, got '" + v + "'", line);
    }
}

/// "dz1 (0,0,1,0) 0.05 0.0" -> component, frequency vector, complex amplitude
inline AlphaMode parse_mode(const std::string& v, int line) {
    AlphaMode m;
    std::istringstream ss(v);
    std::string comp;
    if (!(ss >> comp) || comp.size() < 3 || comp.substr(0, 2) != "dz")
        throw ConfigError("initial.mode: expected component like dz1", line);
    m.comp = parse_int(comp.substr(2), line) - 1;
    std::string freq;
    if (!(ss >> freq) || freq.front() != '(' || freq.back() != ')')
        throw ConfigError("initial.mode: expected frequency tuple (k1,k2,...)", line);
    std::string inner = freq.substr(1, freq.size() - 2);
    std::istringstream fs(inner);
    std::string tok;
    while (std::getline(fs, tok, ',')) m.freq.push_back(parse_int(trim(tok), line));
    double re, im = 0.0;
    if (!(ss >> re)) throw ConfigError("initial.mode: missing amplitude", line);
    ss >> im;
    m.amp = cplx(re, im);
    return m;
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    ExperimentConfig cfg;
    cfg.source_path = path;
    std::string line;
    int lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", lineno);
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        const bool repeatable = (key == "initial.mode" || key == "initial.metric_entry");
        if (!repeatable && !seen.insert(key).second)
            throw ConfigError("duplicate key '" + key + "'", lineno);

        if (key == "domain.type") {
            if (val == "torus") cfg.domain = DomainType::Torus;
            else if (val == "algebra") cfg.domain = DomainType::Algebra;
            else throw ConfigError("domain.type must be torus|algebra", lineno);
        } else if (key == "domain.n") {
            cfg.n = detail::parse_int(val, lineno);
        } else if (key == "domain.N") {
            cfg.N = detail::parse_int(val, lineno);
        } else if (key == "domain.catalog") {
            cfg.catalog_path = val;
        } else if (key == "initial.type") {
            if (val == "flat") cfg.initial = InitialType::Flat;
            else if (val == "alpha_modes") cfg.initial = InitialType::AlphaModes;
            else if (val == "snapshot") cfg.initial = InitialType::Snapshot;
            else if (val == "metric") cfg.initial = InitialType::Metric;
            else throw ConfigError("initial.type must be flat|alpha_modes|snapshot|metric", lineno);
        } else if (key == "initial.mode") {
            cfg.modes.push_back(detail::parse_mode(val, lineno));
        } else if (key == "initial.snapshot") {
            cfg.snapshot_path = val;
        } else if (key == "initial.metric_entry") {
            std::istringstream ss(val);
            MetricEntry e;
            double re, im;
            if (!(ss >> e.i >> e.j >> re >> im))
                throw ConfigError("initial.metric_entry: expected 'i j re im'", lineno);
            e.i -= 1;
            e.j -= 1;
            e.value = cplx(re, im);
            cfg.metric_entries.push_back(e);
        } else if (key == "integrator.dt0") {
            cfg.dt0 = (val == "auto") ? 0.0 : detail::parse_double(val, lineno);
        } else if (key == "integrator.safety") {
            cfg.safety = detail::parse_double(val, lineno);
        } else if (key == "integrator.t_max") {
            cfg.t_max = detail::parse_double(val, lineno);
        } else if (key == "integrator.stop_tol") {
            cfg.stop_tol = detail::parse_double(val, lineno);
        } else if (key == "integrator.adaptive") {
            cfg.adaptive = detail::parse_bool(val, lineno);
        } else if (key == "integrator.max_steps") {
            cfg.max_steps = detail::parse_int(val, lineno);
        } else if (key == "integrator.wall_cap_s") {
            cfg.wall_cap_s = detail::parse_double(val, lineno);
        } else if (key == "monitors.cadence") {
            cfg.cadence = detail::parse_int(val, lineno);
            if (cfg.cadence < 1) throw ConfigError("monitors.cadence must be >= 1", lineno);
        } else if (key == "monitors.suites") {
            cfg.suite_max_principle = false;
            cfg.suite_identities = false;
            cfg.suite_upsilon = false;
            std::istringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = detail::trim(tok);
                if (tok == "max_principle") cfg.suite_max_principle = true;
                else if (tok == "identities") cfg.suite_identities = true;
                else if (tok == "upsilon") cfg.suite_upsilon = true;
                else throw ConfigError("unknown monitor suite '" + tok + "'", lineno);
            }
        } else if (key == "monitors.halt_on_violation") {
            cfg.halt_on_violation = detail::parse_bool(val, lineno);
        } else if (key == "monitors.tol_base") {
            cfg.tol_base = detail::parse_double(val, lineno);
        } else if (key == "monitors.mutate_q_sign") {
            if (val != "covariant" && val != "contravariant" && val != "none")
                throw ConfigError("monitors.mutate_q_sign must be covariant|contravariant|none",
                                  lineno);
            cfg.mutate_q_sign = (val == "none") ? "" : val;
        } else if (key == "output.dir") {
            cfg.out_dir = val;
        } else if (key == "output.formats") {
            cfg.write_csv = false;
            cfg.write_json = false;
            cfg.write_snapshot_file = false;
            std::istringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = detail::trim(tok);
                if (tok == "csv") cfg.write_csv = true;
                else if (tok == "json") cfg.write_json = true;
                else if (tok == "snapshot") cfg.write_snapshot_file = true;
                else throw ConfigError("unknown output format '" + tok + "'", lineno);
            }
        } else if (key == "homog.dt") {
            cfg.ode.dt = detail::parse_double(val, lineno);
        } else if (key == "homog.t_max") {
            cfg.ode.t_max = detail::parse_double(val, lineno);
        } else if (key == "homog.max_steps") {
            cfg.ode.max_steps = detail::parse_int(val, lineno);
        } else if (key == "homog.cadence") {
            cfg.ode.cadence = detail::parse_int(val, lineno);
        } else if (key == "homog.starts") {
            cfg.scan.starts = detail::parse_int(val, lineno);
        } else if (key == "homog.scan_max_iters") {
            cfg.scan.max_iters = detail::parse_int(val, lineno);
        } else if (key == "homog.scan_tol") {
            cfg.scan.grad_tol = detail::parse_double(val, lineno);
        } else if (key == "seed") {
            cfg.seed = std::uint64_t(detail::parse_int(val, lineno));
        } else {
            throw ConfigError("unknown key '" + key + "'", lineno);
        }
    }
    // cross-field checks
    if (cfg.domain == DomainType::Algebra && cfg.catalog_path.empty())
        throw ConfigError("algebra domain requires domain.catalog", 0);
    if (cfg.initial == InitialType::AlphaModes && cfg.modes.empty())
        throw ConfigError("initial.type alpha_modes requires at least one initial.mode", 0);
    if (cfg.initial == InitialType::Snapshot && cfg.snapshot_path.empty())
        throw ConfigError("initial.type snapshot requires initial.snapshot", 0);
    if (cfg.domain == DomainType::Torus && cfg.initial == InitialType::Metric)
        throw ConfigError("initial.type metric is for algebra runs", 0);
    if (cfg.domain == DomainType::Algebra &&
        (cfg.initial == InitialType::AlphaModes || cfg.initial == InitialType::Snapshot))
        throw ConfigError("algebra runs take initial.type flat or metric", 0);
    for (const AlphaMode& m : cfg.modes)
        if (int(m.freq.size()) != 2 * cfg.n)
            throw ConfigError("initial.mode frequency tuple must have 2n entries", 0);
    return cfg;
}

} // namespace pcflab
