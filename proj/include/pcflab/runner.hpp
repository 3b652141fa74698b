#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pcflab/config.hpp"
#include "pcflab/io.hpp"
#include "pcflab/run.hpp"

namespace pcflab {

// Exit codes: 0 success, 1 monitor verdict violation, 2 degeneration,
// 3 config or i/o error (mapped by the CLI wrapper).
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitDegeneration = 2;
inline constexpr int kExitConfigError = 3;

struct RunnerOverrides {
    std::string out_dir;  ///< --out or PCFLAB_OUT
    std::int64_t seed = -1;
    bool quiet = false;
};

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline void apply_overrides(ExperimentConfig& cfg, const RunnerOverrides& ov) {
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    else if (const char* env = std::getenv("PCFLAB_OUT")) cfg.out_dir = env;
    if (ov.seed >= 0) cfg.seed = std::uint64_t(ov.seed);
}

inline InitialData build_initial(const SpectralEngine& eng, const ExperimentConfig& cfg) {
    PotentialForm alpha(eng.grid());
    if (cfg.initial == InitialType::AlphaModes)
        for (const AlphaMode& m : cfg.modes) alpha.add_mode(m);
    return make_pluriclosed_initial(eng, alpha);
}

inline MonitorConfig monitor_config(const ExperimentConfig& cfg) {
    MonitorConfig mc;
    mc.cadence = cfg.cadence;
    mc.max_principle = cfg.suite_max_principle;
    mc.identities = cfg.suite_identities;
    mc.track_upsilon = cfg.suite_upsilon;
    mc.tol_base = cfg.tol_base;
    mc.halt_on_violation = cfg.halt_on_violation;
    if (cfg.mutate_q_sign == "covariant") mc.signs.covariant_q = 1.0;
    if (cfg.mutate_q_sign == "contravariant") mc.signs.contravariant_q = -1.0;
    return mc;
}

inline RunConfig run_config(const ExperimentConfig& cfg) {
    RunConfig rc;
    rc.t_max = cfg.t_max;
    rc.stop_tol = cfg.stop_tol;
    rc.dt0 = cfg.dt0;
    rc.max_steps = cfg.max_steps;
    rc.wall_cap_s = cfg.wall_cap_s;
    rc.controls.safety = cfg.safety;
    rc.controls.adaptive = cfg.adaptive;
    rc.monitors = monitor_config(cfg);
    return rc;
}

inline ordered_json grid_json(const ExperimentConfig& cfg) {
    return ordered_json{{"n", cfg.n}, {"N", cfg.N}};
}

inline ordered_json violation_json(
    const std::optional<std::pair<std::string, MonitorViolation>>& v) {
    if (!v) return nullptr;
    return ordered_json{{"series", v->first}, {"t", v->second.t}, {"delta", v->second.delta}};
}

inline void write_series_csvs(const std::string& dir, const MonitorEngine& mon,
                              std::vector<std::string>& files) {
    std::filesystem::create_directories(dir);
    for (const MonitorSeries& s : mon.series()) {
        std::string path = dir + "/" + s.name + ".csv";
        CsvWriter csv(path, {"t", "value", "slack"});
        for (std::size_t k = 0; k < s.times.size(); ++k)
            csv.row({s.times[k], s.values[k], s.slacks[k]});
        files.push_back(path);
    }
}

inline void write_trajectory_csv(const std::string& path, const MonitorEngine& mon,
                                 std::vector<std::string>& files) {
    std::vector<std::string> cols = {"t"};
    for (const MonitorSeries& s : mon.series()) cols.push_back(s.name);
    CsvWriter csv(path, cols);
    if (!mon.series().empty()) {
        std::size_t rows = mon.series().front().times.size();
        for (std::size_t k = 0; k < rows; ++k) {
            std::vector<double> row;
            row.push_back(mon.series().front().times[k]);
            for (const MonitorSeries& s : mon.series())
                row.push_back(k < s.values.size() ? s.values[k] : 0.0);
            csv.row(row);
        }
    }
    files.push_back(path);
}

inline ordered_json verdicts_json(const MonitorEngine& mon) {
    ordered_json arr = ordered_json::array();
    for (const MonitorSeries& s : mon.series()) {
        ordered_json e;
        e["name"] = s.name;
        e["kind"] = s.kind == MonitorKind::NonIncreasing   ? "non_increasing"
                    : s.kind == MonitorKind::NonDecreasing ? "non_decreasing"
                                                           : "track_only";
        auto v = s.violation();
        e["ok"] = !v.has_value();
        e["violation"] =
            v ? ordered_json{{"t", v->t}, {"delta", v->delta}} : ordered_json(nullptr);
        e["samples"] = s.times.size();
        if (!s.values.empty()) e["final_value"] = s.values.back();
        arr.push_back(e);
    }
    return arr;
}

/// Manifest entries use paths relative to the output directory so that the
/// summary bytes depend only on config + seed.
inline ordered_json manifest_json(const std::vector<std::string>& files,
                                  const std::string& out_dir) {
    ordered_json arr = ordered_json::array();
    for (const std::string& f : files) {
        std::string rel = f;
        if (rel.rfind(out_dir + "/", 0) == 0) rel = rel.substr(out_dir.size() + 1);
        arr.push_back(ordered_json{{"path", rel}, {"fnv1a64", hash_file(f)}});
    }
    return arr;
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open json for writing: " + path);
    out << j.dump(2) << '\n';
}

/// Generic batch plotting script for the emitted CSVs; never opens windows.
inline void write_plot_script(const std::string& dir, std::vector<std::string>& files) {
    std::string path = dir + "/plot.py";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write plot script: " + path);
    out << "#!/usr/bin/env python3\n"
           "\"\"\"Render every monitor series in trajectory.csv to PNG files.\"\"\"\n"
           "import csv\n"
           "import math\n"
           "import os\n"
           "import sys\n"
           "\n"
           "import matplotlib\n"
           "matplotlib.use(\"Agg\")\n"
           "import matplotlib.pyplot as plt\n"
           "\n"
           "here = os.path.dirname(os.path.abspath(__file__))\n"
           "with open(os.path.join(here, \"trajectory.csv\")) as f:\n"
           "    rows = list(csv.DictReader(f))\n"
           "if not rows:\n"
           "    sys.exit(\"no samples\")\n"
           "t = [float(r[\"t\"]) for r in rows]\n"
           "for col in rows[0]:\n"
           "    if col == \"t\":\n"
           "        continue\n"
           "    v = [float(r[col]) for r in rows]\n"
           "    fig, ax = plt.subplots(figsize=(6, 4))\n"
           "    ax.plot(t, v, lw=1.2)\n"
           "    if all(x > 0 for x in v) and max(v) / max(min(v), 1e-300) > 1e3:\n"
           "        ax.set_yscale(\"log\")\n"
           "    ax.set_xlabel(\"t\")\n"
           "    ax.set_ylabel(col)\n"
           "    fig.tight_layout()\n"
           "    fig.savefig(os.path.join(here, col + \".png\"), dpi=120)\n"
           "    plt.close(fig)\n"
           "print(\"wrote\", len(rows[0]) - 1, \"plots\")\n";
    out.close();
    files.push_back(path);
}

} // namespace detail

/// `pcflab flow run <cfg>`: integrate, emit trajectory CSVs, per-series CSVs,
/// a JSON summary with verdicts and fitted rates, and a final snapshot.
inline int cmd_flow_run(ExperimentConfig cfg, const RunnerOverrides& ov) {
    detail::apply_overrides(cfg, ov);
    if (cfg.domain != DomainType::Torus)
        throw ConfigError("flow run requires domain.type = torus", 0);
    GridSpec grid(cfg.n, cfg.N);
    SpectralEngine eng(grid);

    RunConfig rc = detail::run_config(cfg);
    RunResult res;
    if (cfg.initial == InitialType::Snapshot) {
        Snapshot snap = read_snapshot(cfg.snapshot_path);
        if (snap.n != cfg.n || snap.N != cfg.N)
            throw ConfigError("snapshot grid does not match config grid", 0);
        res = run_flow_from_state(eng, state_from_snapshot(snap), rc);
    } else {
        InitialData init = detail::build_initial(eng, cfg);
        res = run_flow(eng, init, rc);
    }

    std::filesystem::create_directories(cfg.out_dir);
    std::vector<std::string> files;
    if (cfg.write_csv) {
        detail::write_trajectory_csv(cfg.out_dir + "/trajectory.csv", *res.monitors, files);
        detail::write_series_csvs(cfg.out_dir + "/series", *res.monitors, files);
        detail::write_plot_script(cfg.out_dir, files);
    }
    if (cfg.write_snapshot_file && res.reason != StopReason::Degeneration) {
        std::string snap_path = cfg.out_dir + "/final.snapshot";
        write_snapshot(snap_path, res.state);
        files.push_back(snap_path);
    }

    int exit_code = kExitOk;
    if (res.violation) exit_code = kExitViolation;
    if (res.reason == StopReason::Degeneration) exit_code = kExitDegeneration;

    if (cfg.write_json) {
        detail::ordered_json j;
        j["tool"] = "pcflab";
        j["schema_version"] = 1;
        j["command"] = "flow-run";
        j["config_file"] = cfg.source_path;
        j["seed"] = cfg.seed;
        j["grid"] = detail::grid_json(cfg);
        j["run"] = detail::ordered_json{
            {"steps", res.steps},
            {"t_final", res.t_final},
            {"stop_reason", to_string(res.reason)},
            {"final_norms",
             detail::ordered_json{{"rhs_inf", res.final_diag.rhs_inf},
                                  {"T_inf", res.final_diag.T_inf},
                                  {"rho_inf", res.final_diag.rho_inf},
                                  {"pluriclosed_residual", res.final_diag.pluriclosed},
                                  {"consistency_residual", res.final_diag.consistency},
                                  {"min_eig", res.final_diag.min_eig},
                                  {"max_eig", res.final_diag.max_eig}}}};
        j["existence"] = detail::ordered_json{
            {"tau_star",
             res.record.tau_star == ExistenceRecord::Tau::Infinite ? "infinite" : "not_computed"},
            {"degeneration",
             res.record.degeneration
                 ? detail::ordered_json{{"t", res.record.degeneration->t},
                                        {"point", res.record.degeneration->point},
                                        {"min_eig", res.record.degeneration->min_eig},
                                        {"what", res.record.degeneration->what}}
                 : detail::ordered_json(nullptr)}};
        j["verdicts"] = detail::verdicts_json(*res.monitors);
        j["first_violation"] = detail::violation_json(res.violation);
        j["rates"] = detail::ordered_json{{"log_sup_T2_slope", res.fitted_T2_slope}};
        if (cfg.suite_identities) {
            detail::ordered_json ir = detail::ordered_json::array();
            for (const IdentityResidualTracker& t : res.monitors->trackers())
                ir.push_back(detail::ordered_json{{"identity", t.id()},
                                                  {"max_residual", t.max_residual()}});
            j["identity_residuals"] = ir;
            j["log_form_margin"] = res.monitors->log_inequality_margin();
        }
        j["files"] = detail::manifest_json(files, cfg.out_dir);
        j["exit_code"] = exit_code;
        detail::write_json_file(cfg.out_dir + "/summary.json", j);
    }
    if (!ov.quiet) {
        std::cout << "flow run: " << to_string(res.reason) << " after " << res.steps
                  << " steps, t = " << res.t_final
                  << ", rhs_inf = " << res.final_diag.rhs_inf << "\n";
        if (res.violation)
            std::cout << "violated verdict: " << res.violation->first << " at t = "
                      << res.violation->second.t << "\n";
    }
    return exit_code;
}

/// `pcflab flow check-identities <cfg>`: calibration gate plus the identity
/// residual suite under dt-halving; exit 0 iff every observed order >= 1.9
/// (or exact) and the two flow formulations agree on random pluriclosed data.
inline int cmd_check_identities(ExperimentConfig cfg, const RunnerOverrides& ov) {
    detail::apply_overrides(cfg, ov);
    if (cfg.domain != DomainType::Torus)
        throw ConfigError("check-identities requires domain.type = torus", 0);
    GridSpec grid(cfg.n, cfg.N);
    SpectralEngine eng(grid);

    CalibrationResult cal = calibrate_adjoint_coeff(eng, cfg.seed + 7, 5);
    bool cal_ok = cal.residual < 1e-6 && cal.coeff == kAdjointCoeff;

    InitialData init = detail::build_initial(eng, cfg);
    RunConfig rc = detail::run_config(cfg);
    rc.monitors.identities = true;
    rc.controls.adaptive = false;
    // raw right sides: the identities describe the continuum flow; the 2/3-rule
    // model error is dt-independent and would floor the observed orders
    rc.controls.dealias = false;
    rc.stop_tol = 0.0; // run the full horizon
    if (rc.dt0 <= 0) {
        MetricPointwise mp = analyze_metric(init.omega0);
        rc.dt0 = 0.5 * cfl_dt(grid, mp, cfg.safety);
    }

    RunResult coarse = run_flow(eng, init, rc);
    RunConfig rc_fine = rc;
    // same cadence in steps: halving dt halves the snapshot spacing, so the
    // centered-difference residual must drop by about four
    rc_fine.dt0 = 0.5 * rc.dt0;
    RunResult fine = run_flow(eng, init, rc_fine);

    detail::ordered_json orders = detail::ordered_json::array();
    bool all_ok = true;
    for (const IdentityResidualTracker& t : coarse.monitors->trackers()) {
        const IdentityResidualTracker* tf = fine.monitors->find_tracker(t.id());
        if (!tf) continue;
        ResidualOrder ro = matched_richardson(t, *tf);
        bool ok = ro.exact || ro.order >= 1.9;
        all_ok = all_ok && ok;
        orders.push_back(detail::ordered_json{{"identity", t.id()},
                                              {"residual_dt", ro.coarse},
                                              {"residual_dt_half", ro.fine},
                                              {"order", ro.exact ? detail::ordered_json("exact")
                                                                 : detail::ordered_json(ro.order)},
                                              {"ok", ok}});
        if (!ov.quiet)
            std::cout << "identity " << t.id() << ": residual " << ro.coarse << " -> " << ro.fine
                      << (ro.exact ? " (exact)" : (", order " + std::to_string(ro.order)))
                      << (ok ? "  [ok]" : "  [FAIL]") << "\n";
    }
    double log_margin = std::min(coarse.monitors->log_inequality_margin(),
                                 fine.monitors->log_inequality_margin());
    bool log_ok = log_margin > -1e-6;
    all_ok = all_ok && log_ok && cal_ok;

    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.write_json) {
        detail::ordered_json j;
        j["tool"] = "pcflab";
        j["schema_version"] = 1;
        j["command"] = "flow-check-identities";
        j["config_file"] = cfg.source_path;
        j["seed"] = cfg.seed;
        j["grid"] = detail::grid_json(cfg);
        j["calibration"] = detail::ordered_json{
            {"coeff_re", cal.coeff.real()},
            {"coeff_im", cal.coeff.imag()},
            {"residual", cal.residual},
            {"ok", cal_ok}};
        j["identity_orders"] = orders;
        j["log_form_margin"] = log_margin;
        j["exit_code"] = all_ok ? kExitOk : kExitViolation;
        detail::write_json_file(cfg.out_dir + "/summary.json", j);
    }
    if (!ov.quiet)
        std::cout << "calibration residual " << cal.residual << (cal_ok ? " [ok]" : " [FAIL]")
                  << ", log-form margin " << log_margin << (log_ok ? " [ok]" : " [FAIL]") << "\n";
    return all_ok ? kExitOk : kExitViolation;
}

/// `pcflab homog run <cfg>`: invariant-metric ODE flow over a catalog algebra.
inline int cmd_homog_run(ExperimentConfig cfg, const RunnerOverrides& ov) {
    detail::apply_overrides(cfg, ov);
    if (cfg.domain != DomainType::Algebra)
        throw ConfigError("homog run requires domain.type = algebra", 0);
    LieAlgebraSpec spec = parse_algebra_file(cfg.catalog_path);
    ComplexFrame frame = build_frame(spec);
    const int n = frame.n;
    Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Identity(n, n);
    for (const MetricEntry& e : cfg.metric_entries) {
        if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
            throw ConfigError("initial.metric_entry index out of range", 0);
        g0(e.i, e.j) = e.value;
        g0(e.j, e.i) = std::conj(e.value);
    }

    OdeResult res = ode_flow(frame, g0, cfg.ode);

    // det-evolution identity along the run:
    // d/dt log det g = |T|^2 - tr_g rho(g0), d/dt by centered differences
    InvariantGeometry geo0 = invariant_geometry(frame, g0);
    double ident_worst = 0.0;
    for (std::size_t k = 1; k + 1 < res.trajectory.size(); ++k) {
        const OdeSample& a = res.trajectory[k - 1];
        const OdeSample& b = res.trajectory[k];
        const OdeSample& c = res.trajectory[k + 1];
        double dt1 = c.t - b.t, dt0 = b.t - a.t;
        if (dt1 <= 0 || dt0 <= 0) continue;
        double lhs = (std::log(c.det) - std::log(a.det)) / (dt1 + dt0);
        Eigen::MatrixXcd gi = b.g.inverse();
        double tr_rho = (gi * geo0.rho).trace().real();
        InvariantGeometry geo = invariant_geometry(frame, b.g);
        double rhs = geo.T_norm_sq - tr_rho;
        ident_worst = std::max(ident_worst, std::abs(lhs - rhs));
    }

    std::filesystem::create_directories(cfg.out_dir);
    std::vector<std::string> files;
    if (cfg.write_csv) {
        std::string path = cfg.out_dir + "/homog_trajectory.csv";
        CsvWriter csv(path, {"t", "T_norm_sq", "det", "min_eig", "max_eig", "rhs_norm"});
        for (const OdeSample& s : res.trajectory)
            csv.row({s.t, s.T_norm_sq, s.det, s.min_eig, s.max_eig, s.rhs_norm});
        files.push_back(path);
    }
    int exit_code = res.degenerate ? kExitDegeneration : kExitOk;
    if (cfg.write_json) {
        const OdeSample& last = res.trajectory.back();
        detail::ordered_json j;
        j["tool"] = "pcflab";
        j["schema_version"] = 1;
        j["command"] = "homog-run";
        j["config_file"] = cfg.source_path;
        j["algebra"] = spec.name;
        j["existence"] = detail::ordered_json{{"tau_star", "not_computed"}};
        j["final"] = detail::ordered_json{{"t", last.t},
                                          {"T_norm_sq", last.T_norm_sq},
                                          {"det", last.det},
                                          {"min_eig", last.min_eig},
                                          {"max_eig", last.max_eig},
                                          {"rhs_norm", last.rhs_norm}};
        j["logdet_identity_residual"] = ident_worst;
        j["degenerate"] =
            res.degenerate
                ? detail::ordered_json{{"t", res.degenerate_t}, {"note", res.note}}
                : detail::ordered_json(nullptr);
        j["files"] = detail::manifest_json(files, cfg.out_dir);
        j["exit_code"] = exit_code;
        detail::write_json_file(cfg.out_dir + "/summary.json", j);
    }
    if (!ov.quiet)
        std::cout << "homog run (" << spec.name << "): " << res.trajectory.size()
                  << " samples, degenerate = " << (res.degenerate ? "yes" : "no") << "\n";
    return exit_code;
}

/// `pcflab homog skt-scan <cfg>`: multi-start SKT-residual minimization.
inline int cmd_homog_scan(ExperimentConfig cfg, const RunnerOverrides& ov) {
    detail::apply_overrides(cfg, ov);
    if (cfg.domain != DomainType::Algebra)
        throw ConfigError("homog skt-scan requires domain.type = algebra", 0);
    LieAlgebraSpec spec = parse_algebra_file(cfg.catalog_path);
    ComplexFrame frame = build_frame(spec);
    ScanResultHomog res = skt_residual_scan(frame, cfg.scan, cfg.seed);

    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.write_json) {
        detail::ordered_json witness = detail::ordered_json::array();
        for (int i = 0; i < frame.n; ++i) {
            detail::ordered_json row = detail::ordered_json::array();
            for (int j = 0; j < frame.n; ++j)
                row.push_back(detail::ordered_json{{"re", res.witness(i, j).real()},
                                                   {"im", res.witness(i, j).imag()}});
            witness.push_back(row);
        }
        double worst = 0.0;
        for (double v : res.per_start) worst = std::max(worst, v);
        detail::ordered_json j;
        j["tool"] = "pcflab";
        j["schema_version"] = 1;
        j["command"] = "homog-skt-scan";
        j["config_file"] = cfg.source_path;
        j["seed"] = cfg.seed;
        j["algebra"] = spec.name;
        j["starts"] = cfg.scan.starts;
        j["converged_starts"] = res.converged_starts;
        j["min_residual"] = res.min_residual;
        j["max_residual_over_starts"] = worst;
        j["witness_metric"] = witness;
        j["exit_code"] = kExitOk;
        detail::write_json_file(cfg.out_dir + "/summary.json", j);
    }
    if (!ov.quiet)
        std::cout << "skt-scan (" << spec.name << "): min residual " << res.min_residual
                  << " over " << cfg.scan.starts << " starts\n";
    return kExitOk;
}

} // namespace pcflab
