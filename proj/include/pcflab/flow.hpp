#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/geometry.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/initial_data.hpp"
#include "pcflab/metric.hpp"
#include "pcflab/spectral.hpp"
#include "pcflab/tensor.hpp"

namespace pcflab {

/// Coefficient c in the coordinate realization (dbar* omega)_i = c * tau_i.
/// Derived from the L2 adjoint on the torus and locked by the calibration test
/// demanding that the Hodge-form flow equals the tensor-form flow -S + Q on
/// pluriclosed data.
inline constexpr cplx kAdjointCoeff{0.0, 1.0};

/// Tensor-form right side: dg/dt = -S + Q.
struct PcfRhsResult {
    HermitianField rhs;
    GeometryData geo;
};

inline PcfRhsResult pcf_rhs(const SpectralEngine& eng, const MetricField& g,
                            bool dealias = true, bool want_rho = false) {
    GeometryOptions opt;
    opt.second = true;
    opt.rho = want_rho;
    opt.dealias = dealias;
    PcfRhsResult out{HermitianField(g.grid()), analyze_geometry(eng, g, opt)};
    const int n = g.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Field& r = out.rhs.comp(i, j);
            const Field& s = out.geo.S.comp(i, j);
            const Field& q = out.geo.Q.comp(i, j);
            for (std::size_t p = 0; p < r.size(); ++p) r[p] = q[p] - s[p];
        }
    out.rhs.hermitize();
    return out;
}

/// Hodge-form right side: d omega/dt = d d* omega + dbar dbar* omega + i d dbar log det g,
/// as the Hermitian matrix of the (1,1)-form. Equals pcf_rhs on pluriclosed metrics.
inline HermitianField pcf_rhs_hodge(const SpectralEngine& eng, const MetricField& g,
                                    cplx adjoint_coeff = kAdjointCoeff, bool dealias = true) {
    const GridSpec& grid = g.grid();
    const int n = grid.n;
    const std::size_t total = grid.total();
    MetricPointwise mp = analyze_metric(g);
    std::vector<Field> Dg = detail::metric_first_derivatives(eng, g);
    TensorField T = torsion_from_derivatives(grid, Dg);

    // w_i = c * tau_i realizes dbar*_g omega
    std::vector<Field> w(std::size_t(n), grid.make_field());
    for (int i = 0; i < n; ++i) {
        Field& t = w[std::size_t(i)];
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                const Field& gi = mp.gi(l, k);
                const Field& Tf = T.at({i, k, l});
                for (std::size_t p = 0; p < total; ++p) t[p] += gi[p] * Tf[p];
            }
        for (auto& v : t) v *= adjoint_coeff;
        if (dealias) eng.dealias_in_place(t);
    }
    Field logdet = mp.logdet;
    if (dealias) eng.dealias_in_place(logdet);
    Field logdet_spec = eng.fft(logdet);

    HermitianField out(grid);
    const cplx I(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        Field wi_spec = eng.fft(w[std::size_t(i)]);
        for (int j = 0; j < n; ++j) {
            // matrix(dbar w)_{i jbar} = i d_jbar w_i
            Field a = wi_spec;
            eng.apply_derivative(a, j, true);
            Field da = eng.ifft(a);
            // matrix(d conj(w))_{i jbar} = -i d_i conj(w_j) = -i conj(d_ibar w_j)
            Field b = eng.fft(w[std::size_t(j)]);
            eng.apply_derivative(b, i, true);
            Field db = eng.ifft(b);
            // matrix(i d dbar log det g)_{i jbar} = d_i d_jbar log det g
            Field c = logdet_spec;
            eng.apply_derivative(c, i, false);
            eng.apply_derivative(c, j, true);
            Field dc = eng.ifft(c);
            Field& o = out.comp(i, j);
            for (std::size_t p = 0; p < total; ++p)
                o[p] = I * da[p] - I * std::conj(db[p]) + dc[p];
        }
    }
    out.hermitize();
    return out;
}

/// Reduced-potential right side on the torus with flat background h (det h = 1):
/// d alpha/dt = dbar*_{g_alpha} omega_alpha - (i/2) d log det g_alpha.
/// Evaluated on the metric reconstructed from alpha (self-contained reduced flow).
inline TensorField alpha_rhs(const SpectralEngine& eng, const MetricField& omega0,
                             const TensorField& alpha, bool dealias = true,
                             cplx adjoint_coeff = kAdjointCoeff) {
    const GridSpec& grid = omega0.grid();
    const int n = grid.n;
    const std::size_t total = grid.total();
    MetricField ga = apply_potential(eng, omega0, alpha);
    MetricPointwise mp = analyze_metric(ga);
    std::vector<Field> Dg = detail::metric_first_derivatives(eng, ga);
    TensorField T = torsion_from_derivatives(grid, Dg);

    TensorField out(grid, {co_slot()});
    Field logdet = mp.logdet;
    if (dealias) eng.dealias_in_place(logdet);
    Field logdet_spec = eng.fft(logdet);
    const cplx half_i(0.0, 0.5);
    for (int i = 0; i < n; ++i) {
        Field& o = out.at({i});
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                const Field& gi = mp.gi(l, k);
                const Field& Tf = T.at({i, k, l});
                for (std::size_t p = 0; p < total; ++p) o[p] += gi[p] * Tf[p];
            }
        for (auto& v : o) v *= adjoint_coeff;
        Field dl = logdet_spec;
        eng.apply_derivative(dl, i, false);
        Field dld = eng.ifft(dl);
        for (std::size_t p = 0; p < total; ++p) o[p] -= half_i * dld[p];
        if (dealias) eng.dealias_in_place(o);
    }
    return out;
}

struct CalibrationResult {
    cplx coeff;
    double residual;                   ///< best candidate's worst-case residual
    std::vector<std::pair<cplx, double>> all;
};

/// Pick the dbar* coefficient by demanding Hodge-form == tensor-form on random
/// pluriclosed metrics. The derivation gives +i; this locks it operationally.
inline CalibrationResult calibrate_adjoint_coeff(const SpectralEngine& eng,
                                                 std::uint64_t seed, int n_metrics = 5,
                                                 double scale = 0.005) {
    std::vector<cplx> candidates = {
        {0.0, 1.0}, {0.0, -1.0}, {0.0, 0.5}, {0.0, -0.5}, {0.0, 2.0}, {0.0, -2.0},
        {1.0, 0.0}, {-1.0, 0.0}, {0.5, 0.0}, {-0.5, 0.0}, {2.0, 0.0}, {-2.0, 0.0}};
    std::mt19937_64 rng(seed);
    std::vector<MetricField> metrics;
    for (int i = 0; i < n_metrics; ++i)
        metrics.push_back(random_pluriclosed_metric(eng, rng, scale).omega0);
    CalibrationResult best;
    best.residual = 1e300;
    for (cplx c : candidates) {
        double worst = 0.0;
        for (const MetricField& g : metrics) {
            PcfRhsResult tensor = pcf_rhs(eng, g, /*dealias=*/true);
            HermitianField hodge = pcf_rhs_hodge(eng, g, c, /*dealias=*/true);
            double r = 0.0;
            for (int i = 0; i < g.n(); ++i)
                for (int j = 0; j < g.n(); ++j) {
                    const Field& a = tensor.rhs.comp(i, j);
                    const Field& b = hodge.comp(i, j);
                    for (std::size_t p = 0; p < a.size(); ++p)
                        r = std::max(r, std::abs(a[p] - b[p]));
                }
            worst = std::max(worst, r);
        }
        best.all.emplace_back(c, worst);
        if (worst < best.residual) {
            best.residual = worst;
            best.coeff = c;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Time integration
// ---------------------------------------------------------------------------

struct DegenerationEvent {
    double t = 0.0;
    std::size_t point = 0;
    double min_eig = 0.0;
    std::string what;
};

/// Formal existence-time bookkeeping.
struct ExistenceRecord {
    enum class Tau { Infinite, NotComputed };
    Tau tau_star = Tau::Infinite;
    std::optional<DegenerationEvent> degeneration;
};

enum class Background { TorusFlat, Homogeneous };

/// tau* = infinity on the torus (vanishing first Bott-Chern class); the class
/// computation for other backgrounds is out of scope and reported as such.
inline ExistenceRecord formal_existence_time(Background b) {
    ExistenceRecord r;
    r.tau_star = (b == Background::TorusFlat) ? ExistenceRecord::Tau::Infinite
                                              : ExistenceRecord::Tau::NotComputed;
    return r;
}

/// Joint state of the tensor flow and the reduced potential flow.
/// Invariant: accepted g is positive definite; the residual
/// ||omega_g - (omega0 + dbar alpha + d conj alpha)|| is reported, not corrected.
struct FlowState {
    double t = 0.0;
    double dt = 0.0;
    MetricField g;
    TensorField alpha;   ///< reduced potential, alpha(0) = 0
    TensorField eta;     ///< fixed (2,0)-form, eta = -d alpha0
    MetricField omega0;  ///< background for the reduction (initial metric)
    // optional co-integrated covariant family solving d beta/dt = Delta beta + mu
    bool has_aux = false;
    TensorField aux_beta;
    TensorField aux_mu;

    static FlowState from_initial(const SpectralEngine& eng, const InitialData& init) {
        FlowState s;
        s.g = init.omega0;
        s.alpha = TensorField(init.omega0.grid(), {co_slot()});
        s.eta = init.eta;
        s.omega0 = init.omega0;
        (void)eng;
        return s;
    }

    void enable_aux(const TensorField& beta0, const TensorField& mu) {
        has_aux = true;
        aux_beta = beta0;
        aux_mu = mu;
    }
};

struct FlowDerivative {
    HermitianField dg;
    TensorField dalpha;
    TensorField dbeta;
    bool has_beta = false;
};

struct StepControls {
    double safety = 0.2;        ///< CFL safety factor
    bool adaptive = true;       ///< reject/halve on guard failures
    double monotone_slack = 1e-7;
    double dt_min = 1e-12;
    int max_rejects = 40;
    bool dealias = true;
};

inline double cfl_dt(const GridSpec& grid, const MetricPointwise& mp, double safety) {
    double h = grid.h();
    return safety * h * h / mp.max_inv_eig;
}

/// Right side of the joint system at a given state snapshot.
inline FlowDerivative flow_derivative(const SpectralEngine& eng, const MetricField& g,
                                      const TensorField& alpha, const MetricField& omega0,
                                      const FlowState& proto, bool dealias,
                                      GeometryData* geo_out = nullptr) {
    FlowDerivative d;
    PcfRhsResult r = pcf_rhs(eng, g, dealias);
    d.dg = std::move(r.rhs);
    d.dalpha = alpha_rhs(eng, omega0, alpha, dealias);
    if (proto.has_aux) {
        d.has_beta = true;
        d.dbeta = chern_laplacian(eng, proto.aux_beta, r.geo, dealias);
        d.dbeta.axpy(cplx(1.0, 0.0), proto.aux_mu);
    }
    if (geo_out) *geo_out = std::move(r.geo);
    return d;
}

namespace detail {

inline void axpy_state(FlowState& y, double a, const FlowDerivative& k) {
    y.g.axpy(a, k.dg);
    y.alpha.axpy(cplx(a, 0.0), k.dalpha);
    if (y.has_aux && k.has_beta) y.aux_beta.axpy(cplx(a, 0.0), k.dbeta);
}

} // namespace detail

struct StepResult {
    bool accepted = false;
    bool degenerate = false;
    DegenerationEvent event;
    double used_dt = 0.0;
};

/// One classical RK4 step of the joint (g, alpha[, beta]) system.
/// On guard failure the caller is expected to halve dt and retry.
inline bool rk4_step(const SpectralEngine& eng, const FlowState& s, double dt,
                     bool dealias, FlowState& out) {
    FlowDerivative k1 = flow_derivative(eng, s.g, s.alpha, s.omega0, s, dealias);
    FlowState mid = s;
    detail::axpy_state(mid, 0.5 * dt, k1);
    FlowDerivative k2;
    {
        FlowState& m = mid;
        if (!m.g.finite()) return false;
        k2 = flow_derivative(eng, m.g, m.alpha, s.omega0, m, dealias);
    }
    FlowState mid2 = s;
    detail::axpy_state(mid2, 0.5 * dt, k2);
    if (!mid2.g.finite()) return false;
    FlowDerivative k3 = flow_derivative(eng, mid2.g, mid2.alpha, s.omega0, mid2, dealias);
    FlowState end = s;
    detail::axpy_state(end, dt, k3);
    if (!end.g.finite()) return false;
    FlowDerivative k4 = flow_derivative(eng, end.g, end.alpha, s.omega0, end, dealias);

    out = s;
    detail::axpy_state(out, dt / 6.0, k1);
    detail::axpy_state(out, dt / 3.0, k2);
    detail::axpy_state(out, dt / 3.0, k3);
    detail::axpy_state(out, dt / 6.0, k4);
    out.t = s.t + dt;
    out.dt = dt;
    out.g.hermitize();
    return out.g.finite();
}

/// Advance one accepted step with positivity and monotone-section guards.
inline StepResult step(const SpectralEngine& eng, FlowState& state, double dt,
                       const StepControls& ctl) {
    StepResult res;
    // monotone guard baseline: sup over i of |dz^i|^2 = g^{ibar i}
    auto sup_sections = [&](const MetricField& g, double& out_sup) -> bool {
        MetricPointwise mp;
        try {
            mp = analyze_metric(g);
        } catch (const DegenerateMetricError&) {
            return false;
        }
        double m = 0.0;
        for (int i = 0; i < g.n(); ++i) {
            ScanResult sc = sup_inf_scan(mp.gi(i, i));
            m = std::max(m, sc.sup);
        }
        out_sup = m;
        return true;
    };
    double base_sup = 0.0;
    if (ctl.adaptive) sup_sections(state.g, base_sup);

    double try_dt = dt;
    for (int attempt = 0; attempt <= ctl.max_rejects; ++attempt) {
        if (try_dt < ctl.dt_min) break;
        FlowState next;
        bool finite;
        try {
            finite = rk4_step(eng, state, try_dt, ctl.dealias, next);
        } catch (const DegenerateMetricError& e) {
            finite = false;
            res.event = {state.t, e.point, e.min_eig, e.what()};
        }
        if (finite) {
            double min_eig;
            std::size_t argmin;
            bool pos = metric_min_eig(next.g, min_eig, argmin);
            if (pos) {
                bool ok = true;
                if (ctl.adaptive) {
                    double new_sup = 0.0;
                    if (!sup_sections(next.g, new_sup)) ok = false;
                    else if (new_sup > base_sup + ctl.monotone_slack * (1.0 + new_sup) * 10.0)
                        ok = false;
                }
                if (ok || !ctl.adaptive) {
                    state = std::move(next);
                    res.accepted = true;
                    res.used_dt = try_dt;
                    return res;
                }
            } else {
                res.event = {state.t, argmin, min_eig, "positivity guard"};
            }
        }
        if (!ctl.adaptive) break;
        try_dt *= 0.5;
    }
    res.degenerate = true;
    if (res.event.what.empty())
        res.event = {state.t, 0, 0.0, "step size underflow or repeated rejection"};
    res.event.t = state.t;
    return res;
}

} // namespace pcflab
