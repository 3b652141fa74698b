#pragma once

#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/metric.hpp"
#include "pcflab/spectral.hpp"
#include "pcflab/tensor.hpp"

namespace pcflab {

// Hermitian-geometry conventions used throughout:
//
//   Gamma^l_ij   = g^{kbar l} d_i g_{j kbar}            (Chern connection)
//   T_{ij kbar}  = d_i g_{j kbar} - d_j g_{i kbar}      (torsion, antisym in i,j)
//   Omega_{i jbar k lbar} = -d_i d_jbar g_{k lbar}
//                          + g^{pbar a} (d_i g_{k pbar})(d_jbar g_{a lbar})
//   S_{i jbar}   = g^{lbar k} Omega_{k lbar i jbar}     (trace on the direction pair)
//   rho_{i jbar} = g^{lbar k} Omega_{i jbar k lbar}     (trace on the endomorphism
//                                                        pair; equals -d_i d_jbar
//                                                        log det g)
//   Q_{i jbar}   = g^{lbar k} g^{nbar m} T_{i k nbar} conj(T_{j l mbar})
//   tau_i        = g^{lbar k} T_{i k lbar}              (torsion trace)
//
// The sign conventions are pinned numerically by two checks: rho against the
// spectral -d dbar log det g, and the Laplacian commutation test against S.

/// Hermitian (1,1)-tensor fields (S, Q, rho, flow updates) share the metric storage.
using HermitianField = MetricField;

struct GeometryOptions {
    bool second = true;   ///< compute mixed second derivatives (needed for S, rho)
    bool rho = false;     ///< compute the first-Chern trace
    bool dealias = false; ///< 2/3-truncate the nonlinear outputs (S, Q, rho, tau)
};

/// Everything derived from one metric snapshot.
struct GeometryData {
    GridSpec grid;
    MetricPointwise mp;
    std::vector<Field> Dg;  ///< [(i*n+j)*n+k] = d_i g_{j kbar}
    std::vector<Field> DDg; ///< [((i*n+l)*n+j)*n+k] = d_i d_lbar g_{j kbar}
    TensorField gamma;      ///< coefficients Gamma^l_ij, slot order [l][i][j]
    TensorField torsion;    ///< T_{ij kbar}, slot order [i][j][k]
    HermitianField S;
    HermitianField Q;
    HermitianField rho;     ///< only if GeometryOptions::rho
    TensorField tau;        ///< torsion trace (1,0)-form

    const Field& dg(int i, int j, int k) const {
        const int n = grid.n;
        return Dg[(std::size_t(i) * n + j) * n + k];
    }
    const Field& ddg(int i, int l, int j, int k) const {
        const int n = grid.n;
        return DDg[((std::size_t(i) * n + l) * n + j) * n + k];
    }
};

namespace detail {

inline std::vector<Field> metric_first_derivatives(const SpectralEngine& eng,
                                                   const MetricField& g) {
    const int n = g.n();
    std::vector<Field> spec(std::size_t(n) * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) spec[std::size_t(j) * n + k] = eng.fft(g.comp(j, k));
    std::vector<Field> Dg(std::size_t(n) * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Field s = spec[std::size_t(j) * n + k];
                eng.apply_derivative(s, i, false);
                Dg[(std::size_t(i) * n + j) * n + k] = eng.ifft(s);
            }
    return Dg;
}

inline std::vector<Field> metric_second_derivatives(const SpectralEngine& eng,
                                                    const MetricField& g) {
    const int n = g.n();
    std::vector<Field> spec(std::size_t(n) * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) spec[std::size_t(j) * n + k] = eng.fft(g.comp(j, k));
    std::vector<Field> DDg(std::size_t(n) * n * n * n);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    Field s = spec[std::size_t(j) * n + k];
                    eng.apply_derivative(s, i, false);
                    eng.apply_derivative(s, l, true);
                    DDg[((std::size_t(i) * n + l) * n + j) * n + k] = eng.ifft(s);
                }
    return DDg;
}

} // namespace detail

/// Chern connection coefficients Gamma^l_ij = g^{kbar l} d_i g_{j kbar}.
/// Pointwise-exact (no truncation): the metric-compatibility identity
/// d_i g_{j kbar} = Gamma^l_ij g_{l kbar} holds to roundoff by construction.
inline TensorField chern_connection(const GridSpec& grid, const std::vector<Field>& Dg,
                                    const MetricPointwise& mp) {
    const int n = grid.n;
    TensorField gamma(grid, {contra_slot(), co_slot(), co_slot()});
    const std::size_t total = grid.total();
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Field& out = gamma.at({l, i, j});
                for (int k = 0; k < n; ++k) {
                    const Field& gi = mp.gi(k, l);
                    const Field& d = Dg[(std::size_t(i) * n + j) * n + k];
                    for (std::size_t p = 0; p < total; ++p) out[p] += gi[p] * d[p];
                }
            }
    return gamma;
}

/// T_{ij kbar} = d_i g_{j kbar} - d_j g_{i kbar}; exactly antisymmetric in (i,j).
inline TensorField torsion_from_derivatives(const GridSpec& grid,
                                            const std::vector<Field>& Dg) {
    const int n = grid.n;
    TensorField T(grid, {co_slot(), co_slot(), co_bar_slot()});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Field& out = T.at({i, j, k});
                const Field& a = Dg[(std::size_t(i) * n + j) * n + k];
                const Field& b = Dg[(std::size_t(j) * n + i) * n + k];
                for (std::size_t p = 0; p < out.size(); ++p) out[p] = a[p] - b[p];
            }
    return T;
}

/// Full geometry pipeline for one metric snapshot.
inline GeometryData analyze_geometry(const SpectralEngine& eng, const MetricField& g,
                                     const GeometryOptions& opt = {}) {
    GeometryData out;
    out.grid = g.grid();
    const int n = g.n();
    const std::size_t total = out.grid.total();
    out.mp = analyze_metric(g);
    out.Dg = detail::metric_first_derivatives(eng, g);
    out.gamma = chern_connection(out.grid, out.Dg, out.mp);
    out.torsion = torsion_from_derivatives(out.grid, out.Dg);

    // tau_i = g^{lbar k} T_{i k lbar}
    out.tau = TensorField(out.grid, {co_slot()});
    for (int i = 0; i < n; ++i) {
        Field& t = out.tau.at({i});
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                const Field& gi = out.mp.gi(l, k);
                const Field& T = out.torsion.at({i, k, l});
                for (std::size_t p = 0; p < total; ++p) t[p] += gi[p] * T[p];
            }
    }

    // Q_{i jbar} = g^{lbar k} g^{nbar m} T_{i k nbar} conj(T_{j l mbar})
    out.Q = HermitianField(out.grid);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Field& q = out.Q.comp(i, j);
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    for (int m = 0; m < n; ++m)
                        for (int nn = 0; nn < n; ++nn) {
                            const Field& gikl = out.mp.gi(l, k);
                            const Field& ginm = out.mp.gi(nn, m);
                            const Field& Ta = out.torsion.at({i, k, nn});
                            const Field& Tb = out.torsion.at({j, l, m});
                            for (std::size_t p = 0; p < total; ++p)
                                q[p] += gikl[p] * ginm[p] * Ta[p] * std::conj(Tb[p]);
                        }
        }
    out.Q.hermitize();

    if (opt.second) {
        out.DDg = detail::metric_second_derivatives(eng, g);
        out.S = HermitianField(out.grid);
        if (opt.rho) out.rho = HermitianField(out.grid);
        // One fused pass: Omega contracted on either index pair.
        Field work(total);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Field& s = out.S.comp(i, j);
                // S_{i jbar} = sum_{k,l} g^{lbar k} Omega_{k lbar i jbar}
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        const Field& gi = out.mp.gi(l, k);
                        const Field& dd = out.ddg(k, l, i, j);
                        for (std::size_t p = 0; p < total; ++p) work[p] = -dd[p];
                        for (int a = 0; a < n; ++a)
                            for (int q = 0; q < n; ++q) {
                                const Field& gpa = out.mp.gi(q, a);
                                const Field& d1 = out.dg(k, i, q);
                                const Field& d2 = out.dg(l, j, a);
                                for (std::size_t p = 0; p < total; ++p)
                                    work[p] += gpa[p] * d1[p] * std::conj(d2[p]);
                            }
                        for (std::size_t p = 0; p < total; ++p) s[p] += gi[p] * work[p];
                    }
                if (opt.rho) {
                    Field& r = out.rho.comp(i, j);
                    // rho_{i jbar} = sum_{k,l} g^{lbar k} Omega_{i jbar k lbar}
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l) {
                            const Field& gi = out.mp.gi(l, k);
                            const Field& dd = out.ddg(i, j, k, l);
                            for (std::size_t p = 0; p < total; ++p) work[p] = -dd[p];
                            for (int a = 0; a < n; ++a)
                                for (int q = 0; q < n; ++q) {
                                    const Field& gpa = out.mp.gi(q, a);
                                    const Field& d1 = out.dg(i, k, q);
                                    const Field& d2 = out.dg(j, l, a);
                                    for (std::size_t p = 0; p < total; ++p)
                                        work[p] += gpa[p] * d1[p] * std::conj(d2[p]);
                                }
                            for (std::size_t p = 0; p < total; ++p) r[p] += gi[p] * work[p];
                        }
                }
            }
        out.S.hermitize();
        if (opt.rho) out.rho.hermitize();
    }

    if (opt.dealias) {
        if (opt.second)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) eng.dealias_in_place(out.S.comp(i, j));
        if (opt.rho)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) eng.dealias_in_place(out.rho.comp(i, j));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) eng.dealias_in_place(out.Q.comp(i, j));
        for (int i = 0; i < n; ++i) eng.dealias_in_place(out.tau.at({i}));
        if (opt.second) out.S.hermitize();
        if (opt.rho) out.rho.hermitize();
        out.Q.hermitize();
    }
    return out;
}

/// sup over the grid of |d_i g_{j kbar} - Gamma^l_ij g_{l kbar}|.
inline double metric_compatibility_residual(const GeometryData& geo, const MetricField& g) {
    const int n = g.n();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const Field& d = geo.dg(i, j, k);
                for (std::size_t p = 0; p < d.size(); ++p) {
                    cplx r = d[p];
                    for (int l = 0; l < n; ++l)
                        r -= geo.gamma.at({l, i, j})[p] * g.comp(l, k)[p];
                    worst = std::max(worst, std::abs(r));
                }
            }
    return worst;
}

// ---------------------------------------------------------------------------
// Covariant derivatives and the Chern Laplacian
// ---------------------------------------------------------------------------

/// Covariant derivative; the new direction slot is prepended.
/// barred=false gives nabla_l (connection acts on unbarred slots),
/// barred=true gives nabla_{kbar} (conjugate coefficients act on barred slots).
inline TensorField nabla(const SpectralEngine& eng, const TensorField& X,
                         const TensorField& gamma, bool barred, bool dealias_out = false) {
    const GridSpec& grid = X.grid();
    const int n = grid.n;
    const std::size_t total = grid.total();
    Signature sig;
    sig.push_back(barred ? co_bar_slot() : co_slot());
    for (const Slot& s : X.sig()) sig.push_back(s);
    TensorField out(grid, sig);

    std::vector<Field> spec(X.comp_count());
    for (std::size_t c = 0; c < X.comp_count(); ++c) spec[c] = eng.fft(X.comp(c));

    std::vector<int> idx(std::size_t(X.rank()) + 1);
    for_each_component(X.rank(), n, [&](const int* xi, std::size_t c) {
        for (int d = 0; d < n; ++d) {
            idx[0] = d;
            for (int s = 0; s < X.rank(); ++s) idx[std::size_t(s) + 1] = xi[s];
            Field& o = out.comp(out.comp_index(idx.data()));
            Field sp = spec[c];
            eng.apply_derivative(sp, d, barred);
            o = eng.ifft(sp);
            // connection terms
            std::vector<int> mod(xi, xi + X.rank());
            for (int s = 0; s < X.rank(); ++s) {
                const Slot& sl = X.sig()[std::size_t(s)];
                if (sl.barred != barred) continue;
                for (int m = 0; m < n; ++m) {
                    mod[std::size_t(s)] = m;
                    const Field& xm = X.comp(X.comp_index(mod.data()));
                    if (sl.var == Variance::Contra) {
                        const Field& G = gamma.at({xi[s], d, m});
                        if (!barred)
                            for (std::size_t p = 0; p < total; ++p) o[p] += G[p] * xm[p];
                        else
                            for (std::size_t p = 0; p < total; ++p)
                                o[p] += std::conj(G[p]) * xm[p];
                    } else {
                        const Field& G = gamma.at({m, d, xi[s]});
                        if (!barred)
                            for (std::size_t p = 0; p < total; ++p) o[p] -= G[p] * xm[p];
                        else
                            for (std::size_t p = 0; p < total; ++p)
                                o[p] -= std::conj(G[p]) * xm[p];
                    }
                }
                mod[std::size_t(s)] = xi[s];
            }
            if (dealias_out) eng.dealias_in_place(o);
        }
    });
    return out;
}

inline bool laplacian_supports(const Signature& sig) {
    if (sig.empty()) return true;
    bool pure_co = true, pure_contra = true;
    for (const Slot& s : sig) {
        if (!(s.var == Variance::Co && !s.barred)) pure_co = false;
        if (!(s.var == Variance::Contra && !s.barred)) pure_contra = false;
    }
    if (pure_co || pure_contra) return true;
    return sig == one_one_sig();
}

/// Chern Laplacian Delta = g^{kbar l} nabla_l nabla_{kbar}.
/// Scalars reduce to g^{kbar l} d_l d_{kbar} f.
inline TensorField chern_laplacian(const SpectralEngine& eng, const TensorField& X,
                                   const GeometryData& geo, bool dealias_mid = false) {
    if (!laplacian_supports(X.sig()))
        throw SignatureError("chern_laplacian: unsupported tensor signature");
    const GridSpec& grid = X.grid();
    const int n = grid.n;
    const std::size_t total = grid.total();
    TensorField Y = nabla(eng, X, geo.gamma, true, dealias_mid);
    TensorField Z = nabla(eng, Y, geo.gamma, false, false);
    TensorField out(grid, X.sig());
    std::vector<int> zi(std::size_t(X.rank()) + 2);
    for_each_component(X.rank(), n, [&](const int* xi, std::size_t c) {
        Field& o = out.comp(c);
        for (int s = 0; s < X.rank(); ++s) zi[std::size_t(s) + 2] = xi[s];
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                zi[0] = l;
                zi[1] = k;
                const Field& z = Z.comp(Z.comp_index(zi.data()));
                const Field& gi = geo.mp.gi(k, l);
                for (std::size_t p = 0; p < total; ++p) o[p] += gi[p] * z[p];
            }
    });
    return out;
}

/// Scalar Chern Laplacian of a (complex) scalar field.
inline Field chern_laplacian_scalar(const SpectralEngine& eng, const Field& f,
                                    const MetricPointwise& mp) {
    const GridSpec& grid = mp.grid;
    const int n = grid.n;
    Field out = grid.make_field();
    Field spec = eng.fft(f);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) {
            Field s = spec;
            eng.apply_derivative(s, l, false);
            eng.apply_derivative(s, k, true);
            Field d = eng.ifft(s);
            const Field& gi = mp.gi(k, l);
            for (std::size_t p = 0; p < out.size(); ++p) out[p] += gi[p] * d[p];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Inner products, norms, Q-traces
// ---------------------------------------------------------------------------

namespace detail {

/// Slot pairing weight at one point; I indexes X's slot, J the conjugate slot.
inline cplx slot_weight(const Slot& s, const MetricField& g, const MetricPointwise& mp,
                        int I, int J, std::size_t p) {
    if (s.var == Variance::Co)
        return s.barred ? mp.gi(I, J)[p] : mp.gi(J, I)[p];
    return s.barred ? g.comp(J, I)[p] : g.comp(I, J)[p];
}

} // namespace detail

/// Pointwise Hermitian inner product <X, Y> for same-signature tensors.
inline Field inner_product(const TensorField& X, const TensorField& Y, const MetricField& g,
                           const MetricPointwise& mp) {
    if (X.sig() != Y.sig()) throw SignatureError("inner_product: signature mismatch");
    const GridSpec& grid = X.grid();
    const int n = grid.n;
    const int r = X.rank();
    Field out = grid.make_field();
    for_each_component(r, n, [&](const int* I, std::size_t ci) {
        std::vector<int> Iv(I, I + r);
        for_each_component(r, n, [&](const int* J, std::size_t cj) {
            const Field& x = X.comp(ci);
            const Field& y = Y.comp(cj);
            for (std::size_t p = 0; p < out.size(); ++p) {
                cplx w = x[p] * std::conj(y[p]);
                if (w == cplx(0.0, 0.0)) continue;
                for (int s = 0; s < r; ++s)
                    w *= detail::slot_weight(X.sig()[std::size_t(s)], g, mp, Iv[std::size_t(s)],
                                             J[s], p);
                out[p] += w;
            }
        });
    });
    return out;
}

/// |X|^2 pointwise (real field).
inline Field tensor_norm_sq(const TensorField& X, const MetricField& g,
                            const MetricPointwise& mp) {
    Field ip = inner_product(X, X, g, mp);
    for (auto& v : ip) v = cplx(v.real(), 0.0);
    return ip;
}

/// Slot-summed Q-trace: sum_r <Q, tr_g over all slots but r of (X (x) Xbar)>.
/// For a pure p-tensor this equals the factor-p pairing in the evolution
/// identities; the covariant variant carries raised Q.
inline Field ip_Q_trace(const HermitianField& Q, const TensorField& X, const MetricField& g,
                        const MetricPointwise& mp) {
    const GridSpec& grid = X.grid();
    const int n = grid.n;
    const int r = X.rank();
    bool covariant;
    {
        bool pure_co = r > 0, pure_contra = r > 0;
        for (const Slot& s : X.sig()) {
            if (!(s.var == Variance::Co && !s.barred)) pure_co = false;
            if (!(s.var == Variance::Contra && !s.barred)) pure_contra = false;
        }
        if (!pure_co && !pure_contra)
            throw SignatureError("ip_Q_trace: tensor must be pure unbarred co- or contravariant");
        covariant = pure_co;
    }
    const std::size_t total = grid.total();
    // Pointwise pairing matrix: Q_{i jbar} for contravariant slots, or Q with both
    // indices raised, g^{jbar a} Q_{a bbar} g^{bbar i}, for covariant slots.
    std::vector<Field> W(std::size_t(n) * n, grid.make_field());
    if (!covariant) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) W[std::size_t(i) * n + j] = Q.comp(i, j);
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Field& w = W[std::size_t(i) * n + j];
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        const Field& g1 = mp.gi(j, a);
                        const Field& qa = Q.comp(a, b);
                        const Field& g2 = mp.gi(b, i);
                        for (std::size_t p = 0; p < total; ++p)
                            w[p] += g1[p] * qa[p] * g2[p];
                    }
            }
    }
    Field out = grid.make_field();
    for_each_component(r, n, [&](const int* I, std::size_t ci) {
        std::vector<int> Iv(I, I + r);
        for_each_component(r, n, [&](const int* J, std::size_t cj) {
            const Field& x = X.comp(ci);
            const Field& y = X.comp(cj);
            for (int slot = 0; slot < r; ++slot) {
                const Field& w0 = W[std::size_t(Iv[std::size_t(slot)]) * n + J[slot]];
                for (std::size_t p = 0; p < total; ++p) {
                    cplx w = x[p] * std::conj(y[p]);
                    if (w == cplx(0.0, 0.0)) continue;
                    w *= w0[p];
                    for (int s = 0; s < r; ++s) {
                        if (s == slot) continue;
                        w *= detail::slot_weight(X.sig()[std::size_t(s)], g, mp,
                                                 Iv[std::size_t(s)], J[s], p);
                    }
                    out[p] += w;
                }
            }
        });
    });
    for (auto& v : out) v = cplx(v.real(), 0.0);
    return out;
}

/// |grad f|^2 = g^{mbar l} (d_l f) conj(d_m f) for a scalar field.
inline Field scalar_grad_norm_sq(const SpectralEngine& eng, const Field& f,
                                 const MetricPointwise& mp) {
    const GridSpec& grid = mp.grid;
    const int n = grid.n;
    Field spec = eng.fft(f);
    std::vector<Field> df{std::size_t(n), Field{}};
    for (int l = 0; l < n; ++l) {
        Field s = spec;
        eng.apply_derivative(s, l, false);
        df[std::size_t(l)] = eng.ifft(s);
    }
    Field out = grid.make_field();
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
            const Field& gi = mp.gi(m, l);
            for (std::size_t p = 0; p < out.size(); ++p)
                out[p] += gi[p] * df[std::size_t(l)][p] * std::conj(df[std::size_t(m)][p]);
        }
    for (auto& v : out) v = cplx(v.real(), 0.0);
    return out;
}

/// Frobenius norm |H| of a Hermitian (1,1)-tensor, pointwise:
/// |H|^2 = g^{kbar i} g^{jbar l} H_{i jbar} conj(H_{k lbar}).
inline Field hermitian_norm_sq(const HermitianField& H, const MetricPointwise& mp) {
    const GridSpec& grid = H.grid();
    const int n = grid.n;
    Field out = grid.make_field();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const Field& a = H.comp(i, j);
                    const Field& b = H.comp(k, l);
                    const Field& g1 = mp.gi(k, i);
                    const Field& g2 = mp.gi(j, l);
                    for (std::size_t p = 0; p < out.size(); ++p)
                        out[p] += g1[p] * g2[p] * a[p] * std::conj(b[p]);
                }
    for (auto& v : out) v = cplx(v.real(), 0.0);
    return out;
}

/// |T|^2 pointwise; equals tr_g Q (used by the log-det evolution identity).
inline Field torsion_norm_sq(const GeometryData& geo, const MetricField& g) {
    return tensor_norm_sq(geo.torsion, g, geo.mp);
}

/// Same residual from already-computed second derivatives.
inline double pluriclosed_residual_from(const GeometryData& geo) {
    const int n = geo.grid.n;
    if (n < 2 || geo.DDg.empty()) return 0.0;
    double worst = 0.0;
    for (int k = 0; k < n; ++k)
        for (int i = k + 1; i < n; ++i)
            for (int l = 0; l < n; ++l)
                for (int j = l + 1; j < n; ++j) {
                    const Field& a = geo.ddg(k, l, i, j);
                    const Field& b = geo.ddg(i, l, k, j);
                    const Field& c = geo.ddg(k, j, i, l);
                    const Field& d = geo.ddg(i, j, k, l);
                    for (std::size_t p = 0; p < a.size(); ++p)
                        worst = std::max(worst, std::abs(a[p] - b[p] - c[p] + d[p]));
                }
    return worst;
}

/// sup norm of i d dbar omega; zero certifies the metric is pluriclosed.
inline double pluriclosed_residual(const SpectralEngine& eng, const MetricField& g) {
    const int n = g.n();
    if (n < 2) return 0.0;
    std::vector<Field> DDg = detail::metric_second_derivatives(eng, g);
    const std::size_t total = g.grid().total();
    auto dd = [&](int i, int l, int j, int k) -> const Field& {
        return DDg[((std::size_t(i) * n + l) * n + j) * n + k];
    };
    double worst = 0.0;
    for (int k = 0; k < n; ++k)
        for (int i = k + 1; i < n; ++i)
            for (int l = 0; l < n; ++l)
                for (int j = l + 1; j < n; ++j) {
                    const Field& a = dd(k, l, i, j);
                    const Field& b = dd(i, l, k, j);
                    const Field& c = dd(k, j, i, l);
                    const Field& d = dd(i, j, k, l);
                    for (std::size_t p = 0; p < total; ++p)
                        worst = std::max(worst, std::abs(a[p] - b[p] - c[p] + d[p]));
                }
    return worst;
}

} // namespace pcflab
