#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "pcflab/flow.hpp"
#include "pcflab/monitors.hpp"

namespace pcflab {

enum class StopReason { Converged, TMax, MaxSteps, WallClock, Violation, Degeneration };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::Converged: return "converged";
        case StopReason::TMax: return "t_max";
        case StopReason::MaxSteps: return "max_steps";
        case StopReason::WallClock: return "wall_clock";
        case StopReason::Violation: return "violation";
        case StopReason::Degeneration: return "degeneration";
    }
    return "?";
}

struct RunConfig {
    double t_max = 2.0;
    double stop_tol = 1e-6;   ///< converged when ||-S+Q||_inf drops below this
    double dt0 = 0.0;         ///< 0 = CFL-determined
    int max_steps = 500000;
    double wall_cap_s = 0.0;  ///< 0 = none
    StepControls controls;
    MonitorConfig monitors;
};

struct FinalDiagnostics {
    double rhs_inf = 0.0;
    double T_inf = 0.0;
    double rho_inf = 0.0;
    double pluriclosed = 0.0;
    double consistency = 0.0;
    double min_eig = 0.0;
    double max_eig = 0.0;
};

struct RunResult {
    StopReason reason = StopReason::TMax;
    int steps = 0;
    double t_final = 0.0;
    ExistenceRecord record;
    FinalDiagnostics final_diag;
    double fitted_T2_slope = 0.0;
    std::optional<std::pair<std::string, MonitorViolation>> violation;
    FlowState state;
    std::unique_ptr<MonitorEngine> monitors;
};

/// Integrate the joint pluriclosed flow from an existing state (restart path).
inline RunResult run_flow_from_state(const SpectralEngine& eng, FlowState state,
                                     const RunConfig& cfg) {
    RunResult out;
    out.record = formal_existence_time(Background::TorusFlat);
    out.state = std::move(state);
    out.monitors = std::make_unique<MonitorEngine>(eng, eng.grid(), cfg.monitors);
    if (cfg.monitors.identities) {
        // co-integrated covariant family with constant forcing
        TensorField beta0(eng.grid(), covariant_sig(1));
        for (auto& v : beta0.at({0})) v = cplx(1.0, 0.0);
        TensorField mu(eng.grid(), covariant_sig(1));
        for (auto& v : mu.at({0})) v = cplx(0.05, 0.02);
        if (eng.grid().n > 1)
            for (auto& v : mu.at({1})) v = cplx(0.0, 0.03);
        out.state.enable_aux(beta0, mu);
    }

    auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    };

    // initial sample
    {
        PcfRhsResult r = pcf_rhs(eng, out.state.g, cfg.controls.dealias);
        double rhs_inf = r.rhs.finite() ? sup_metric_abs(r.rhs) : 1e300;
        out.monitors->sample(out.state, r.geo, rhs_inf, 1);
        if (rhs_inf < cfg.stop_tol) {
            out.reason = StopReason::Converged;
        }
        out.state.dt = cfg.dt0 > 0 ? cfg.dt0 : cfl_dt(eng.grid(), r.geo.mp, cfg.controls.safety);
    }

    int since_sample = 0;
    bool done = (out.reason == StopReason::Converged);
    while (!done) {
        if (out.steps >= cfg.max_steps) { out.reason = StopReason::MaxSteps; break; }
        if (cfg.wall_cap_s > 0 && elapsed() > cfg.wall_cap_s) {
            out.reason = StopReason::WallClock;
            break;
        }
        if (out.state.t >= cfg.t_max) { out.reason = StopReason::TMax; break; }

        double dt = std::min(out.state.dt, cfg.t_max - out.state.t);
        StepResult sr = step(eng, out.state, dt, cfg.controls);
        if (sr.degenerate) {
            out.record.degeneration = sr.event;
            out.reason = StopReason::Degeneration;
            break;
        }
        ++out.steps;
        ++since_sample;
        if (cfg.controls.adaptive) {
            // recover the step size slowly, capped by the CFL bound of the new state
            double cap;
            try {
                MetricPointwise mp = analyze_metric(out.state.g);
                cap = cfl_dt(eng.grid(), mp, cfg.controls.safety);
            } catch (const DegenerateMetricError& e) {
                out.record.degeneration = DegenerationEvent{out.state.t, e.point, e.min_eig,
                                                            e.what()};
                out.reason = StopReason::Degeneration;
                break;
            }
            out.state.dt = std::min(sr.used_dt * 1.25, cap);
            if (cfg.dt0 > 0) out.state.dt = std::min(out.state.dt, cfg.dt0);
        } else {
            out.state.dt = cfg.dt0 > 0 ? cfg.dt0 : sr.used_dt;
        }

        if (since_sample >= cfg.monitors.cadence || out.state.t >= cfg.t_max) {
            double rhs_inf;
            try {
                PcfRhsResult r = pcf_rhs(eng, out.state.g, cfg.controls.dealias);
                rhs_inf = sup_metric_abs(r.rhs);
                out.monitors->sample(out.state, r.geo, rhs_inf, since_sample);
            } catch (const DegenerateMetricError& e) {
                // the reconstructed potential metric can degenerate before the
                // tensor metric does on runs that are blowing up
                out.record.degeneration =
                    DegenerationEvent{out.state.t, e.point, e.min_eig, e.what()};
                out.reason = StopReason::Degeneration;
                break;
            }
            since_sample = 0;
            auto v = out.monitors->first_violation();
            if (v && cfg.monitors.halt_on_violation) {
                out.reason = StopReason::Violation;
                break;
            }
            if (rhs_inf < cfg.stop_tol) {
                out.reason = StopReason::Converged;
                break;
            }
        }
    }

    out.t_final = out.state.t;
    out.violation = out.monitors->first_violation();
    if (out.violation && out.reason != StopReason::Degeneration)
        if (cfg.monitors.halt_on_violation) out.reason = StopReason::Violation;

    // final diagnostics (with rho)
    try {
        PcfRhsResult r = pcf_rhs(eng, out.state.g, cfg.controls.dealias, /*want_rho=*/true);
        out.final_diag.rhs_inf = sup_metric_abs(r.rhs);
        out.final_diag.rho_inf = sup_metric_abs(r.geo.rho);
        out.final_diag.T_inf = r.geo.torsion.sup_abs();
        out.final_diag.pluriclosed = pluriclosed_residual_from(r.geo);
        out.final_diag.min_eig = r.geo.mp.min_eig;
        out.final_diag.max_eig = r.geo.mp.max_eig;
        MetricField ga = apply_potential(eng, out.state.omega0, out.state.alpha);
        double cons = 0.0;
        for (int i = 0; i < eng.grid().n; ++i)
            for (int j = 0; j < eng.grid().n; ++j) {
                const Field& a = out.state.g.comp(i, j);
                const Field& b = ga.comp(i, j);
                for (std::size_t p = 0; p < a.size(); ++p)
                    cons = std::max(cons, std::abs(a[p] - b[p]));
            }
        out.final_diag.consistency = cons;
    } catch (const DegenerateMetricError&) {
        // degenerate final state: norms stay at defaults
    }

    for (const auto& s : out.monitors->series())
        if (s.name == "sup_T2") out.fitted_T2_slope = fit_log_slope(s.times, s.values);
    return out;
}

/// Integrate the joint pluriclosed flow with monitors sampled at the configured
/// cadence. The trajectory's monitor series live in the returned MonitorEngine.
inline RunResult run_flow(const SpectralEngine& eng, const InitialData& init,
                          const RunConfig& cfg) {
    return run_flow_from_state(eng, FlowState::from_initial(eng, init), cfg);
}

} // namespace pcflab
