#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/flow.hpp"
#include "pcflab/geometry.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/initial_data.hpp"

namespace pcflab {

// ---------------------------------------------------------------------------
// Monotonicity series
// ---------------------------------------------------------------------------

enum class MonitorKind { NonIncreasing, NonDecreasing, TrackOnly };

struct MonitorViolation {
    double t = 0.0;
    double delta = 0.0; ///< amount by which the slack was exceeded
};

/// Time-stamped scalar diagnostic with a monotonicity verdict.
/// Slack per sample interval is tol_base * (1 + ||RHS||_inf) * steps, accumulated
/// linearly; discrete maximum principles fail by O(dt) locally.
struct MonitorSeries {
    std::string name;
    MonitorKind kind = MonitorKind::TrackOnly;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> slacks; ///< slack allowed between sample k-1 and k
    double tol_base = 1e-7;

    void add(double t, double v, double slack) {
        times.push_back(t);
        values.push_back(v);
        slacks.push_back(slack);
    }

    /// Recompute the verdict from stored samples.
    std::optional<MonitorViolation> violation() const {
        for (std::size_t k = 1; k < values.size(); ++k) {
            double dv = values[k] - values[k - 1];
            if (kind == MonitorKind::NonIncreasing && dv > slacks[k])
                return MonitorViolation{times[k], dv - slacks[k]};
            if (kind == MonitorKind::NonDecreasing && -dv > slacks[k])
                return MonitorViolation{times[k], -dv - slacks[k]};
        }
        return std::nullopt;
    }

    bool ok() const { return kind == MonitorKind::TrackOnly || !violation().has_value(); }
};

/// Least-squares slope of log(values) over the last half of the samples.
inline double fit_log_slope(const std::vector<double>& times, const std::vector<double>& values,
                            double floor = 1e-300) {
    std::size_t n = times.size();
    if (n < 4) return 0.0;
    std::size_t start = n / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t k = start; k < n; ++k) {
        double y = std::log(std::max(values[k], floor));
        sx += times[k];
        sy += y;
        sxx += times[k] * times[k];
        sxy += times[k] * y;
        ++m;
    }
    double denom = double(m) * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) return 0.0;
    return (double(m) * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------
// Identity residuals
// ---------------------------------------------------------------------------

/// Residual of one evolution identity: centered finite difference of the tracked
/// scalar field in time against the analytic right side, evaluated at the sample
/// cadence (independent of the integrator's internal stages).
class IdentityResidualTracker {
public:
    explicit IdentityResidualTracker(std::string id) : id_(std::move(id)) {}

    const std::string& id() const { return id_; }

    void add_sample(double t, Field value, Field rhs) {
        ts_.push_back(t);
        vals_.push_back(std::move(value));
        rhss_.push_back(std::move(rhs));
        if (ts_.size() < 3) return;
        std::size_t k = ts_.size() - 2;
        double a = ts_[k + 1] - ts_[k];
        double b = ts_[k] - ts_[k - 1];
        if (a <= 0 || b <= 0) return;
        const Field& fp = vals_[k + 1];
        const Field& f0 = vals_[k];
        const Field& fm = vals_[k - 1];
        const Field& r = rhss_[k];
        double worst = 0.0;
        double scale = 1.0 / (a * b * (a + b));
        for (std::size_t p = 0; p < f0.size(); ++p) {
            cplx ddt = (b * b * fp[p] + (a * a - b * b) * f0[p] - a * a * fm[p]) * scale;
            worst = std::max(worst, std::abs(ddt - r[p]));
            margin_min_ = std::min(margin_min_, (r[p] - ddt).real());
        }
        res_t_.push_back(ts_[k]);
        res_.push_back(worst);
        if (ts_.size() > 3) {
            ts_.pop_front();
            vals_.pop_front();
            rhss_.pop_front();
        }
    }

    double max_residual() const {
        double m = 0.0;
        for (double r : res_) m = std::max(m, r);
        return m;
    }
    /// min over samples and grid of (rhs - d/dt); >= -tol verifies the
    /// inequality form d/dt <= rhs.
    double min_signed_margin() const { return margin_min_; }
    const std::vector<double>& residual_times() const { return res_t_; }
    const std::vector<double>& residuals() const { return res_; }

private:
    std::string id_;
    std::deque<double> ts_;
    std::deque<Field> vals_;
    std::deque<Field> rhss_;
    std::vector<double> res_t_;
    std::vector<double> res_;
    double margin_min_ = 1e300;
};

/// Richardson order from residuals at dt and dt/2; "exact" when both are at
/// the roundoff floor.
struct ResidualOrder {
    double coarse = 0.0;
    double fine = 0.0;
    bool exact = false;
    double order = 0.0;
};

inline ResidualOrder richardson_order(double coarse, double fine, double floor = 1e-12) {
    ResidualOrder r;
    r.coarse = coarse;
    r.fine = fine;
    if (coarse < floor && fine < floor) {
        r.exact = true;
        r.order = 99.0;
        return r;
    }
    r.order = std::log2(std::max(coarse, 1e-300) / std::max(fine, 1e-300));
    return r;
}

/// Richardson order with the residuals compared at the same trajectory time:
/// the coarse run's worst sample is matched against the fine run's residual at
/// that instant (fine sample times contain the coarse ones when dt is halved
/// at fixed cadence).
inline ResidualOrder matched_richardson(const IdentityResidualTracker& coarse,
                                        const IdentityResidualTracker& fine,
                                        double floor = 1e-12) {
    double rc = 0.0, tc = 0.0;
    for (std::size_t k = 0; k < coarse.residuals().size(); ++k)
        if (coarse.residuals()[k] > rc) {
            rc = coarse.residuals()[k];
            tc = coarse.residual_times()[k];
        }
    double rf = -1.0;
    double best = 1e300;
    for (std::size_t k = 0; k < fine.residuals().size(); ++k) {
        double d = std::abs(fine.residual_times()[k] - tc);
        if (d < best) {
            best = d;
            rf = fine.residuals()[k];
        }
    }
    if (rf < 0.0) return richardson_order(rc, coarse.max_residual(), floor);
    return richardson_order(rc, rf, floor);
}

// ---------------------------------------------------------------------------
// Identity right sides (the evolution equations, term by term)
// ---------------------------------------------------------------------------

struct IdentitySigns {
    double covariant_q = -1.0;    ///< proper sign of the Q-trace in the covariant identity
    double contravariant_q = 1.0; ///< proper sign in the contravariant identity
};

/// sup of |dbar X| over components; nonzero means the field is not holomorphic.
inline double dbar_residual(const SpectralEngine& eng, const TensorField& X) {
    double worst = 0.0;
    for (std::size_t c = 0; c < X.comp_count(); ++c)
        for (int j = 0; j < X.grid().n; ++j)
            worst = std::max(worst, sup_abs(eng.derivative(X.comp(c), j, true)));
    return worst;
}

inline void require_holomorphic(const SpectralEngine& eng, const TensorField& X,
                                const char* who) {
    double r = dbar_residual(eng, X);
    if (r > 1e-10)
        throw SignatureError(std::string(who) +
                             ": section is not holomorphic (dbar residual " +
                             std::to_string(r) + ")");
}

/// d/dt |beta|^2 = Delta |beta|^2 - |nabla beta|^2 - p<Q, tr_g beta (x) betabar>
/// for a holomorphic covariant section (the |nablabar beta|^2 term vanishes).
inline Field covariant_identity_rhs(const SpectralEngine& eng, const GeometryData& geo,
                                    const MetricField& g, const TensorField& beta,
                                    double q_sign) {
    require_holomorphic(eng, beta, "covariant_identity_rhs");
    Field value = tensor_norm_sq(beta, g, geo.mp);
    Field rhs = chern_laplacian_scalar(eng, value, geo.mp);
    TensorField nb = nabla(eng, beta, geo.gamma, false);
    Field grad = tensor_norm_sq(nb, g, geo.mp);
    Field qtr = ip_Q_trace(geo.Q, beta, g, geo.mp);
    for (std::size_t p = 0; p < rhs.size(); ++p)
        rhs[p] += -grad[p] + q_sign * qtr[p];
    return rhs;
}

/// d/dt |A|^2 = Delta |A|^2 - |nabla A|^2 + p<Q, tr_g A (x) Abar> for holomorphic
/// contravariant tensors.
inline Field contravariant_identity_rhs(const SpectralEngine& eng, const GeometryData& geo,
                                        const MetricField& g, const TensorField& A,
                                        double q_sign) {
    require_holomorphic(eng, A, "contravariant_identity_rhs");
    Field value = tensor_norm_sq(A, g, geo.mp);
    Field rhs = chern_laplacian_scalar(eng, value, geo.mp);
    TensorField na = nabla(eng, A, geo.gamma, false);
    Field grad = tensor_norm_sq(na, g, geo.mp);
    Field qtr = ip_Q_trace(geo.Q, A, g, geo.mp);
    for (std::size_t p = 0; p < rhs.size(); ++p)
        rhs[p] += -grad[p] + q_sign * qtr[p];
    return rhs;
}

/// Log form: d/dt log|A|^2 <= Delta log|A|^2 + p |T|^2.
inline Field contravariant_log_rhs(const SpectralEngine& eng, const GeometryData& geo,
                                   const MetricField& g, const TensorField& A) {
    Field value = tensor_norm_sq(A, g, geo.mp);
    Field logv = value;
    for (auto& v : logv) v = std::log(std::max(v.real(), 1e-300));
    Field rhs = chern_laplacian_scalar(eng, logv, geo.mp);
    Field t2 = torsion_norm_sq(geo, g);
    double p_count = double(A.rank());
    for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] += p_count * t2[p];
    return rhs;
}

/// General parabolic family d beta/dt = Delta beta + mu:
/// d/dt |beta|^2 = Delta|beta|^2 - |nabla beta|^2 - |nablabar beta|^2
///                 - p<Q, tr> + 2 Re<beta, mu>.
inline Field forced_identity_rhs(const SpectralEngine& eng, const GeometryData& geo,
                                 const MetricField& g, const TensorField& beta,
                                 const TensorField& mu) {
    if (beta.sig() != mu.sig())
        throw SignatureError("forced_identity_rhs: forcing/field signature mismatch");
    Field value = tensor_norm_sq(beta, g, geo.mp);
    Field rhs = chern_laplacian_scalar(eng, value, geo.mp);
    TensorField nb = nabla(eng, beta, geo.gamma, false);
    Field grad = tensor_norm_sq(nb, g, geo.mp);
    TensorField nbbar = nabla(eng, beta, geo.gamma, true);
    Field gradbar = tensor_norm_sq(nbbar, g, geo.mp);
    Field qtr = ip_Q_trace(geo.Q, beta, g, geo.mp);
    Field cross = inner_product(beta, mu, g, geo.mp);
    for (std::size_t p = 0; p < rhs.size(); ++p)
        rhs[p] += -grad[p] - gradbar[p] - qtr[p] + 2.0 * cross[p].real();
    return rhs;
}

/// (d/dt - Delta) log det g/det h = |T|^2 - tr_g rho(h); flat h gives rho(h) = 0.
inline Field logdet_identity_rhs(const SpectralEngine& eng, const GeometryData& geo,
                                 const MetricField& g) {
    Field rhs = chern_laplacian_scalar(eng, geo.mp.logdet, geo.mp);
    Field t2 = torsion_norm_sq(geo, g);
    for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] += t2[p];
    return rhs;
}

/// phi = d alpha - eta along the reduced flow:
/// (d/dt - Delta)|phi|^2 = -|nabla phi|^2 - |T|^2 - 2<Q, phi (x) phibar>.
/// All terms are evaluated on the metric reconstructed from alpha.
struct PhiIdentityTerms {
    Field value; ///< |phi|^2
    Field rhs;   ///< full right side, d/dt side
    double rhs_max = 0.0; ///< sup of (rhs - Delta|phi|^2): must be <= 0 up to tolerance
};

inline PhiIdentityTerms phi_identity_terms(const SpectralEngine& eng,
                                           const MetricField& omega0,
                                           const TensorField& alpha, const TensorField& eta) {
    MetricField ga = apply_potential(eng, omega0, alpha);
    GeometryOptions opt;
    opt.second = false;
    GeometryData geo = analyze_geometry(eng, ga, opt);
    TensorField phi = del_alpha_two_form(eng, alpha, 1.0);
    phi.axpy(cplx(-1.0, 0.0), eta);
    PhiIdentityTerms out;
    out.value = tensor_norm_sq(phi, ga, geo.mp);
    Field lap = chern_laplacian_scalar(eng, out.value, geo.mp);
    TensorField np = nabla(eng, phi, geo.gamma, false);
    Field grad = tensor_norm_sq(np, ga, geo.mp);
    Field t2 = torsion_norm_sq(geo, ga);
    Field qtr = ip_Q_trace(geo.Q, phi, ga, geo.mp);
    out.rhs = lap;
    double m = -1e300;
    for (std::size_t p = 0; p < out.rhs.size(); ++p) {
        double neg = -grad[p].real() - t2[p].real() - qtr[p].real();
        out.rhs[p] += neg;
        m = std::max(m, neg);
    }
    out.rhs_max = m;
    return out;
}

// ---------------------------------------------------------------------------
// Pointwise inequality margins (Kato, Cauchy-Schwarz chain)
// ---------------------------------------------------------------------------

/// min over the grid of |nabla A|^2 |A|^2 - |nabla |A|^2|^2 where |A|^2 > floor.
inline double kato_margin(const SpectralEngine& eng, const GeometryData& geo,
                          const MetricField& g, const TensorField& A, double floor = 1e-10) {
    Field a2 = tensor_norm_sq(A, g, geo.mp);
    Field grad_a2 = scalar_grad_norm_sq(eng, a2, geo.mp);
    TensorField na = nabla(eng, A, geo.gamma, false);
    Field na2 = tensor_norm_sq(na, g, geo.mp);
    double m = 1e300;
    for (std::size_t p = 0; p < a2.size(); ++p) {
        if (a2[p].real() <= floor) continue;
        m = std::min(m, na2[p].real() * a2[p].real() - grad_a2[p].real());
    }
    return m;
}

/// Margins of <Q, tr(A (x) Abar)> <= |Q| |A|^2 <= |T|^2 |A|^2, min over the grid.
struct CauchySchwarzMargins {
    double first = 0.0;  ///< min of |Q||A|^2 - <Q, tr>
    double second = 0.0; ///< min of (|T|^2 - |Q|) |A|^2
};

inline CauchySchwarzMargins cauchy_schwarz_chain(const GeometryData& geo, const MetricField& g,
                                                 const TensorField& A) {
    Field a2 = tensor_norm_sq(A, g, geo.mp);
    Field q2 = hermitian_norm_sq(geo.Q, geo.mp);
    Field t2 = torsion_norm_sq(geo, g);
    Field qtr = ip_Q_trace(geo.Q, A, g, geo.mp);
    CauchySchwarzMargins m{1e300, 1e300};
    for (std::size_t p = 0; p < a2.size(); ++p) {
        double qn = std::sqrt(std::max(0.0, q2[p].real()));
        m.first = std::min(m.first, qn * a2[p].real() - qtr[p].real());
        m.second = std::min(m.second, (t2[p].real() - qn) * a2[p].real());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Connection-difference norms
// ---------------------------------------------------------------------------

struct UpsilonNorms {
    double ups_inf = 0.0;      ///< sup |Upsilon|_h
    double grad_ups_inf = 0.0; ///< sup |nabla_h Upsilon|_h (both derivative types)
};

/// Upsilon(g,h) = Gamma(g) - Gamma(h), measured with h.
inline UpsilonNorms upsilon_norms(const SpectralEngine& eng, const MetricField& g,
                                  const MetricField& h) {
    GeometryOptions opt;
    opt.second = false;
    GeometryData geo_g = analyze_geometry(eng, g, opt);
    GeometryData geo_h = analyze_geometry(eng, h, opt);
    TensorField ups = geo_g.gamma;
    ups.axpy(cplx(-1.0, 0.0), geo_h.gamma);
    UpsilonNorms out;
    Field n2 = tensor_norm_sq(ups, h, geo_h.mp);
    for (auto& v : n2) v = cplx(std::sqrt(std::max(0.0, v.real())), 0.0);
    out.ups_inf = sup_inf_scan(n2).sup;
    TensorField d1 = nabla(eng, ups, geo_h.gamma, false);
    TensorField d2 = nabla(eng, ups, geo_h.gamma, true);
    Field m1 = tensor_norm_sq(d1, h, geo_h.mp);
    Field m2 = tensor_norm_sq(d2, h, geo_h.mp);
    double worst = 0.0;
    for (std::size_t p = 0; p < m1.size(); ++p)
        worst = std::max(worst, std::sqrt(std::max(0.0, m1[p].real() + m2[p].real())));
    out.grad_ups_inf = worst;
    return out;
}

// ---------------------------------------------------------------------------
// Monitor engine
// ---------------------------------------------------------------------------

struct MonitorConfig {
    int cadence = 5;          ///< accepted steps between samples
    bool max_principle = true;
    bool identities = false;
    bool track_upsilon = false;
    double tol_base = 1e-7;
    bool halt_on_violation = false;
    double phi_norm_floor = 1e-10; ///< excluded locus for the log in Phi
    IdentitySigns signs;
};

/// Collected verdicts and residuals for one run.
class MonitorEngine {
public:
    MonitorEngine(const SpectralEngine& eng, const GridSpec& grid, MonitorConfig cfg)
        : eng_(&eng), grid_(grid), cfg_(cfg), flat_(grid, /*flat=*/true) {
        const int n = grid.n;
        covariant_sections_ = holomorphic_frame_sections(grid, Variance::Co, 1);
        contravariant_sections_ = holomorphic_frame_sections(grid, Variance::Contra, 1);
        for (int i = 0; i < n; ++i) {
            series_.push_back({"sup_dz" + std::to_string(i + 1) + "_sq",
                               MonitorKind::NonIncreasing, {}, {}, {}, cfg.tol_base});
            series_.push_back({"sup_Phi_" + std::to_string(i + 1),
                               MonitorKind::NonIncreasing, {}, {}, {}, cfg.tol_base});
            series_.push_back({"sup_dzdual" + std::to_string(i + 1) + "_sq",
                               MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        }
        series_.push_back({"inf_det_ratio", MonitorKind::NonDecreasing, {}, {}, {}, cfg.tol_base});
        series_.push_back({"sup_det_ratio", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"sup_phi_sq", MonitorKind::NonIncreasing, {}, {}, {}, cfg.tol_base});
        series_.push_back({"sup_T2", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"rhs_inf", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"formulation_residual", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"pluriclosed_residual", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"consistency_residual", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"min_eig", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"max_eig", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"properness_margin", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"metric_lower_bound", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"metric_upper_bound", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        series_.push_back({"phi_rhs_max", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        if (cfg.track_upsilon) {
            series_.push_back({"upsilon_inf", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
            series_.push_back({"upsilon_grad_inf", MonitorKind::TrackOnly, {}, {}, {}, cfg.tol_base});
        }
        if (cfg.identities) {
            trackers_.emplace_back("covariant_section_p1");
            trackers_.emplace_back("covariant_section_p2");
            trackers_.emplace_back("contravariant_tensor");
            trackers_.emplace_back("parabolic_forced");
            trackers_.emplace_back("logdet_ratio");
            trackers_.emplace_back("phi");
        }
    }

    /// Record one sample; geo must be the geometry of state.g with second
    /// derivatives (the flow RHS cache).
    void sample(const FlowState& state, const GeometryData& geo, double rhs_inf,
                int steps_since_last) {
        const int n = grid_.n;
        const double slack =
            cfg_.tol_base * (1.0 + rhs_inf) * std::max(1, steps_since_last);
        const double t = state.t;

        // reconstructed metric from the potential (reduced-flow side)
        MetricField ga = apply_potential(*eng_, state.omega0, state.alpha);
        MetricPointwise mpa = analyze_metric(ga);
        TensorField phi = del_alpha_two_form(*eng_, state.alpha, 1.0);
        phi.axpy(cplx(-1.0, 0.0), state.eta);
        Field phi2 = tensor_norm_sq(phi, ga, mpa);

        double consistency = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Field& a = state.g.comp(i, j);
                const Field& b = ga.comp(i, j);
                for (std::size_t p = 0; p < a.size(); ++p)
                    consistency = std::max(consistency, std::abs(a[p] - b[p]));
            }

        Field t2 = torsion_norm_sq(geo, state.g);
        ScanResult t2s = sup_inf_scan(t2);
        ScanResult dets = sup_inf_scan(geo.mp.det);
        ScanResult phis = sup_inf_scan(phi2);

        // properness sandwich: at every point
        //   1/sum_i g^{ibar i} <= lambda_min(g) <= lambda_max(g) <= sum_i g_{ibar i};
        // the global bounds reconstructed from the section norms are reported too
        double properness_margin = 1e300;
        double recon_lo = 1e300, recon_hi = 0.0;
        {
            const std::size_t total = grid_.total();
            for (std::size_t p = 0; p < total; ++p) {
                double co = 0.0, contra = 0.0;
                for (int i = 0; i < n; ++i) {
                    co += geo.mp.gi(i, i)[p].real();
                    contra += state.g.comp(i, i)[p].real();
                }
                double lo = geo.mp.min_eig_pt[p];
                properness_margin = std::min(properness_margin, lo - 1.0 / co);
                properness_margin = std::min(properness_margin, contra - lo);
                recon_lo = std::min(recon_lo, 1.0 / co);
                recon_hi = std::max(recon_hi, contra);
            }
        }

        for (int i = 0; i < n; ++i) {
            ScanResult co = sup_inf_scan(geo.mp.gi(i, i));
            set("sup_dz" + std::to_string(i + 1) + "_sq", t, co.sup, slack);
            ScanResult contra = sup_inf_scan(state.g.comp(i, i));
            set("sup_dzdual" + std::to_string(i + 1) + "_sq", t, contra.sup, slack);
            // Phi = log|section|^2 + p|phi|^2 on the reduced-flow metric
            double sup_phi_i = -1e300;
            const Field& gii = ga.comp(i, i);
            for (std::size_t p = 0; p < gii.size(); ++p) {
                double s2 = gii[p].real();
                if (s2 < cfg_.phi_norm_floor) continue;
                sup_phi_i = std::max(sup_phi_i, std::log(s2) + phi2[p].real());
            }
            set("sup_Phi_" + std::to_string(i + 1), t, sup_phi_i, slack);
        }
        set("inf_det_ratio", t, dets.inf, slack);
        set("sup_det_ratio", t, dets.sup, slack);
        set("sup_phi_sq", t, phis.sup, slack);
        set("sup_T2", t, t2s.sup, slack);
        set("rhs_inf", t, rhs_inf, slack);
        // Hodge-form vs tensor-form right side along the run
        {
            HermitianField hodge = pcf_rhs_hodge(*eng_, state.g);
            double worst = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const Field& s = geo.S.comp(i, j);
                    const Field& q = geo.Q.comp(i, j);
                    const Field& h = hodge.comp(i, j);
                    for (std::size_t p = 0; p < s.size(); ++p)
                        worst = std::max(worst, std::abs(q[p] - s[p] - h[p]));
                }
            set("formulation_residual", t, worst, slack);
        }
        set("pluriclosed_residual", t, pluriclosed_residual_from(geo), slack);
        set("consistency_residual", t, consistency, slack);
        set("min_eig", t, geo.mp.min_eig, slack);
        set("max_eig", t, geo.mp.max_eig, slack);
        set("properness_margin", t, properness_margin, slack);
        set("metric_lower_bound", t, recon_lo, slack);
        set("metric_upper_bound", t, recon_hi, slack);
        if (cfg_.track_upsilon) {
            UpsilonNorms u = upsilon_norms(*eng_, state.g, flat_);
            set("upsilon_inf", t, u.ups_inf, slack);
            set("upsilon_grad_inf", t, u.grad_ups_inf, slack);
        }

        if (cfg_.identities) {
            const MetricField& g = state.g;
            // covariant p=1: beta = dz^1
            {
                const TensorField& beta = covariant_sections_[0];
                Field value = tensor_norm_sq(beta, g, geo.mp);
                Field rhs = covariant_identity_rhs(*eng_, geo, g, beta, cfg_.signs.covariant_q);
                tracker("covariant_section_p1").add_sample(t, std::move(value), std::move(rhs));
            }
            // covariant p=2: beta = dz^1 (x) dz^min(2,n)
            {
                TensorField beta(grid_, covariant_sig(2));
                int second = (n > 1) ? 1 : 0;
                for (auto& v : beta.at({0, second})) v = cplx(1.0, 0.0);
                Field value = tensor_norm_sq(beta, g, geo.mp);
                Field rhs = covariant_identity_rhs(*eng_, geo, g, beta, cfg_.signs.covariant_q);
                tracker("covariant_section_p2").add_sample(t, std::move(value), std::move(rhs));
            }
            // contravariant p=1: A = d/dz^1, equality and log forms
            {
                const TensorField& A = contravariant_sections_[0];
                Field value = tensor_norm_sq(A, g, geo.mp);
                Field rhs =
                    contravariant_identity_rhs(*eng_, geo, g, A, cfg_.signs.contravariant_q);
                tracker("contravariant_tensor").add_sample(t, value, std::move(rhs));
                Field logv = value;
                for (auto& v : logv) v = std::log(std::max(v.real(), 1e-300));
                Field logrhs = contravariant_log_rhs(*eng_, geo, g, A);
                log_tracker_.add_sample(t, std::move(logv), std::move(logrhs));
            }
            // forced parabolic family (if co-integrated)
            if (state.has_aux) {
                Field value = tensor_norm_sq(state.aux_beta, g, geo.mp);
                Field rhs = forced_identity_rhs(*eng_, geo, g, state.aux_beta, state.aux_mu);
                tracker("parabolic_forced").add_sample(t, std::move(value), std::move(rhs));
            }
            // log det ratio (flat h)
            {
                Field value = geo.mp.logdet;
                Field rhs = logdet_identity_rhs(*eng_, geo, g);
                tracker("logdet_ratio").add_sample(t, std::move(value), std::move(rhs));
            }
            // phi (on the reduced-flow metric)
            {
                PhiIdentityTerms terms = phi_identity_terms(*eng_, state.omega0, state.alpha,
                                                            state.eta);
                set("phi_rhs_max", t, terms.rhs_max, slack);
                tracker("phi").add_sample(t, std::move(terms.value), std::move(terms.rhs));
            }
        } else {
            set("phi_rhs_max", t, 0.0, slack);
        }
        ++samples_;
    }

    /// min over samples and grid of [Delta log|A|^2 + p|T|^2 - d/dt log|A|^2];
    /// >= -tol verifies the log-form inequality.
    double log_inequality_margin() const { return log_tracker_.min_signed_margin(); }

    std::optional<std::pair<std::string, MonitorViolation>> first_violation() const {
        std::optional<std::pair<std::string, MonitorViolation>> best;
        for (const auto& s : series_) {
            auto v = s.violation();
            if (!v) continue;
            if (!best || v->t < best->second.t) best = std::make_pair(s.name, *v);
        }
        return best;
    }

    const std::vector<MonitorSeries>& series() const { return series_; }
    const std::vector<IdentityResidualTracker>& trackers() const { return trackers_; }
    const IdentityResidualTracker& log_form_tracker() const { return log_tracker_; }
    int samples() const { return samples_; }

    IdentityResidualTracker& tracker(const std::string& id) {
        for (auto& t : trackers_)
            if (t.id() == id) return t;
        throw Error("unknown identity tracker: " + id);
    }
    const IdentityResidualTracker* find_tracker(const std::string& id) const {
        for (const auto& t : trackers_)
            if (t.id() == id) return &t;
        return nullptr;
    }

private:
    void set(const std::string& name, double t, double v, double slack) {
        for (auto& s : series_)
            if (s.name == name) {
                s.add(t, v, slack);
                return;
            }
        throw Error("unknown monitor series: " + name);
    }

    const SpectralEngine* eng_;
    GridSpec grid_;
    MonitorConfig cfg_;
    MetricField flat_;
    std::vector<TensorField> covariant_sections_;
    std::vector<TensorField> contravariant_sections_;
    std::vector<MonitorSeries> series_;
    std::vector<IdentityResidualTracker> trackers_;
    IdentityResidualTracker log_tracker_{"contravariant_log_form"};
    int samples_ = 0;
};

} // namespace pcflab
