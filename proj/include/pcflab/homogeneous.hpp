#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pcflab/common.hpp"

namespace pcflab {

// Left-invariant Hermitian geometry on a Lie algebra with complex structure.
//
// In an invariant (1,0)-frame {Z_a} the coordinate derivatives of the PDE module
// are replaced by bracket structure:
//   [Z_a, Z_b]    = C^c_ab Z_c                      (integrability: no (0,1) part)
//   [Z_a, Zbar_b] = D^c_ab Z_c + E^c_ab Zbar_c
// Vanishing (1,1)-torsion forces nabla_{Zbar_b} Z_a = [Zbar_b, Z_a]^{1,0} = -D^c_ab Z_c,
// and metric compatibility then gives
//   Gamma^c_ba = g^{ebar c} conj(D^f_eb) g_{a fbar}.
// Torsion and curvature follow from their definitions:
//   T^c_ab = Gamma^c_ab - Gamma^c_ba - C^c_ab
//   Omega^e_a(Z_k, Zbar_l) = -D^c_al Gamma^e_kc + Gamma^c_ka D^e_cl
//                            - D^c_kl Gamma^e_ca + E^c_kl D^e_ac
// These equations are validated on the abelian algebra (everything vanishes) and
// against the torus module on constant fields.

/// Real structure constants [e_i, e_j] = c^k_ij e_k plus a complex structure J.
struct LieAlgebraSpec {
    std::string name;
    int dim = 0;                 ///< real dimension 2n
    std::vector<double> c;       ///< c[(k*dim+i)*dim+j]
    Eigen::MatrixXd J;

    double cc(int k, int i, int j) const {
        return c[(std::size_t(k) * dim + i) * dim + j];
    }
    void set_c(int k, int i, int j, double v) {
        c[(std::size_t(k) * dim + i) * dim + j] = v;
        c[(std::size_t(k) * dim + j) * dim + i] = -v;
    }

    Eigen::VectorXd bracket(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
        for (int k = 0; k < dim; ++k)
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) out[k] += cc(k, i, j) * u[i] * v[j];
        return out;
    }

    Eigen::VectorXcd bracket(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
        for (int k = 0; k < dim; ++k)
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) out[k] += cc(k, i, j) * u[i] * v[j];
        return out;
    }

    double jacobi_residual() const {
        double worst = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j)
                for (int k = j + 1; k < dim; ++k) {
                    Eigen::VectorXd ei = Eigen::VectorXd::Unit(dim, i);
                    Eigen::VectorXd ej = Eigen::VectorXd::Unit(dim, j);
                    Eigen::VectorXd ek = Eigen::VectorXd::Unit(dim, k);
                    Eigen::VectorXd r = bracket(bracket(ei, ej), ek) +
                                        bracket(bracket(ej, ek), ei) +
                                        bracket(bracket(ek, ei), ej);
                    worst = std::max(worst, r.cwiseAbs().maxCoeff());
                }
        return worst;
    }

    double nijenhuis_residual() const {
        double worst = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j) {
                Eigen::VectorXd x = Eigen::VectorXd::Unit(dim, i);
                Eigen::VectorXd y = Eigen::VectorXd::Unit(dim, j);
                Eigen::VectorXd jx = J * x;
                Eigen::VectorXd jy = J * y;
                Eigen::VectorXd n = bracket(jx, jy) - J * bracket(jx, y) -
                                    J * bracket(x, jy) - bracket(x, y);
                worst = std::max(worst, n.cwiseAbs().maxCoeff());
            }
        return worst;
    }

    /// Antisymmetry is structural; Jacobi and the complex structure are checked.
    void validate() const {
        if (dim < 2 || dim % 2 != 0) throw Error("algebra: dim must be even and >= 2");
        if (jacobi_residual() > 1e-12)
            throw Error("algebra '" + name + "': Jacobi identity violated");
        Eigen::MatrixXd j2 = J * J + Eigen::MatrixXd::Identity(dim, dim);
        if (j2.cwiseAbs().maxCoeff() > 1e-12)
            throw Error("algebra '" + name + "': J^2 != -1");
        if (nijenhuis_residual() > 1e-12)
            throw Error("algebra '" + name + "': complex structure not integrable");
    }
};

/// Complexified (1,0)-frame data: bases Z_a and the bracket components C, D, E.
struct ComplexFrame {
    int n = 0;                ///< complex dimension
    Eigen::MatrixXcd Z;       ///< columns Z_a as vectors in the complexified algebra
    // C[c][a][b]: [Z_a,Z_b] = C^c_ab Z_c; D,E: [Z_a,Zbar_b] = D^c_ab Z_c + E^c_ab Zbar_c
    std::vector<cplx> C, D, E;

    cplx Cc(int c, int a, int b) const { return C[(std::size_t(c) * n + a) * n + b]; }
    cplx Dc(int c, int a, int b) const { return D[(std::size_t(c) * n + a) * n + b]; }
    cplx Ec(int c, int a, int b) const { return E[(std::size_t(c) * n + a) * n + b]; }
};

inline ComplexFrame build_frame(const LieAlgebraSpec& spec) {
    spec.validate();
    const int dim = spec.dim;
    const int n = dim / 2;
    ComplexFrame f;
    f.n = n;

    // greedy J-adapted real basis: v_a with {v_1, J v_1, ..., v_n, J v_n} independent
    Eigen::MatrixXd picked(dim, 0);
    std::vector<Eigen::VectorXd> vs;
    for (int i = 0; i < dim && int(vs.size()) < n; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Unit(dim, i);
        Eigen::MatrixXd trial(dim, picked.cols() + 2);
        if (picked.cols() > 0) trial.leftCols(picked.cols()) = picked;
        trial.col(picked.cols()) = v;
        trial.col(picked.cols() + 1) = spec.J * v;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
        if (lu.rank() == trial.cols()) {
            picked = trial;
            vs.push_back(v);
        }
    }
    if (int(vs.size()) != n) throw Error("algebra: failed to build a J-adapted basis");

    f.Z = Eigen::MatrixXcd(dim, n);
    for (int a = 0; a < n; ++a)
        f.Z.col(a) = 0.5 * (vs[std::size_t(a)].cast<cplx>() -
                            cplx(0.0, 1.0) * (spec.J * vs[std::size_t(a)]).cast<cplx>());

    // basis matrix [Z, conj Z] for expanding brackets
    Eigen::MatrixXcd M(dim, dim);
    M.leftCols(n) = f.Z;
    M.rightCols(n) = f.Z.conjugate();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);

    f.C.assign(std::size_t(n) * n * n, cplx(0, 0));
    f.D.assign(std::size_t(n) * n * n, cplx(0, 0));
    f.E.assign(std::size_t(n) * n * n, cplx(0, 0));
    double integrability = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Eigen::VectorXcd zz = spec.bracket(Eigen::VectorXcd(f.Z.col(a)),
                                               Eigen::VectorXcd(f.Z.col(b)));
            Eigen::VectorXcd x = lu.solve(zz);
            for (int c = 0; c < n; ++c) {
                f.C[(std::size_t(c) * n + a) * n + b] = x[c];
                integrability = std::max(integrability, std::abs(x[n + c]));
            }
            Eigen::VectorXcd zzbar = spec.bracket(Eigen::VectorXcd(f.Z.col(a)),
                                                  Eigen::VectorXcd(f.Z.col(b).conjugate()));
            Eigen::VectorXcd y = lu.solve(zzbar);
            for (int c = 0; c < n; ++c) {
                f.D[(std::size_t(c) * n + a) * n + b] = y[c];
                f.E[(std::size_t(c) * n + a) * n + b] = y[n + c];
            }
        }
    if (integrability > 1e-10)
        throw Error("algebra '" + spec.name + "': [Z,Z] has a (0,1) part (" +
                    std::to_string(integrability) + ")");
    return f;
}

/// T, S, Q, rho and the connection for one invariant metric (constant matrices).
struct InvariantGeometry {
    Eigen::MatrixXcd S, Q, rho;
    std::vector<cplx> T;      ///< T_{ab ebar}, lowered, index (a*n+b)*n+e
    std::vector<cplx> gamma;  ///< Gamma^c_ab, index (c*n+a)*n+b
    double T_norm_sq = 0.0;   ///< |T|^2_g

    cplx Tl(int a, int b, int e, int n) const { return T[(std::size_t(a) * n + b) * n + e]; }
};

inline InvariantGeometry invariant_geometry(const ComplexFrame& f, const Eigen::MatrixXcd& g) {
    const int n = f.n;
    InvariantGeometry out;
    Eigen::MatrixXcd gi = g.inverse(); // gi(i,j) = g^{ibar j} (inverse of g_{i jbar})

    // Gamma^c_ba = g^{ebar c} conj(D^f_eb) g_{a fbar}
    out.gamma.assign(std::size_t(n) * n * n, cplx(0, 0));
    auto gam = [&](int c, int b, int a) -> cplx& {
        return out.gamma[(std::size_t(c) * n + b) * n + a];
    };
    for (int c = 0; c < n; ++c)
        for (int b = 0; b < n; ++b)
            for (int a = 0; a < n; ++a) {
                cplx s(0, 0);
                for (int e = 0; e < n; ++e)
                    for (int ff = 0; ff < n; ++ff)
                        s += gi(e, c) * std::conj(f.Dc(ff, e, b)) * g(a, ff);
                gam(c, b, a) = s;
            }
    auto Gamma = [&](int c, int x, int y) { return gam(c, x, y); }; // Gamma^c_{x y}

    // T^c_ab = Gamma^c_ab - Gamma^c_ba - C^c_ab, lowered with g
    out.T.assign(std::size_t(n) * n * n, cplx(0, 0));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int e = 0; e < n; ++e) {
                cplx s(0, 0);
                for (int c = 0; c < n; ++c)
                    s += (Gamma(c, a, b) - Gamma(c, b, a) - f.Cc(c, a, b)) * g(c, e);
                out.T[(std::size_t(a) * n + b) * n + e] = s;
            }

    // Omega^e_a(Z_k, Zbar_l)
    auto omega = [&](int e, int a, int k, int l) {
        cplx s(0, 0);
        for (int c = 0; c < n; ++c) {
            s += -f.Dc(c, a, l) * Gamma(e, k, c);
            s += Gamma(c, k, a) * f.Dc(e, c, l);
            s += -f.Dc(c, k, l) * Gamma(e, c, a);
            s += f.Ec(c, k, l) * f.Dc(e, a, c);
        }
        return s;
    };

    out.S = Eigen::MatrixXcd::Zero(n, n);
    out.rho = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            cplx s(0, 0);
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    for (int e = 0; e < n; ++e) s += gi(l, k) * omega(e, a, k, l) * g(e, b);
            out.S(a, b) = s;
            cplx r(0, 0);
            for (int e = 0; e < n; ++e) r += omega(e, e, a, b);
            out.rho(a, b) = r;
        }
    out.S = 0.5 * (out.S + out.S.adjoint().eval());

    out.Q = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            cplx s(0, 0);
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    for (int m = 0; m < n; ++m)
                        for (int nn = 0; nn < n; ++nn)
                            s += gi(l, k) * gi(nn, m) * out.Tl(a, k, nn, n) *
                                 std::conj(out.Tl(b, l, m, n));
            out.Q(a, b) = s;
        }
    out.Q = 0.5 * (out.Q + out.Q.adjoint().eval());

    double t2 = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int e = 0; e < n; ++e)
                for (int ap = 0; ap < n; ++ap)
                    for (int bp = 0; bp < n; ++bp)
                        for (int ep = 0; ep < n; ++ep) {
                            cplx w = gi(ap, a) * gi(bp, b) * gi(e, ep) *
                                     out.Tl(a, b, e, n) * std::conj(out.Tl(ap, bp, ep, n));
                            t2 += w.real();
                        }
    out.T_norm_sq = t2;
    return out;
}

// ---------------------------------------------------------------------------
// Invariant forms and the SKT residual
// ---------------------------------------------------------------------------

/// Dense antisymmetric k-form over the complexified frame (W_0..W_{2n-1}) =
/// (Z_1..Z_n, Zbar_1..Zbar_n). Index alpha >= n means barred.
struct InvariantForm {
    int dim = 0; ///< 2n
    int degree = 0;
    std::vector<cplx> comps; ///< dense, (2n)^degree entries

    InvariantForm(int dim_, int degree_)
        : dim(dim_), degree(degree_) {
        std::size_t total = 1;
        for (int i = 0; i < degree; ++i) total *= std::size_t(dim);
        comps.assign(total, cplx(0, 0));
    }

    cplx& at(const std::vector<int>& idx) {
        std::size_t c = 0;
        for (int s = 0; s < degree; ++s) c = c * std::size_t(dim) + std::size_t(idx[std::size_t(s)]);
        return comps[c];
    }
    cplx at(const std::vector<int>& idx) const {
        std::size_t c = 0;
        for (int s = 0; s < degree; ++s) c = c * std::size_t(dim) + std::size_t(idx[std::size_t(s)]);
        return comps[c];
    }
};

namespace detail {

/// Full complexified bracket tensor B^gamma_{alpha beta}.
inline std::vector<cplx> complexified_bracket(const ComplexFrame& f) {
    const int n = f.n;
    const int dim = 2 * n;
    std::vector<cplx> B(std::size_t(dim) * dim * dim, cplx(0, 0));
    auto set = [&](int g, int a, int b, cplx v) {
        B[(std::size_t(g) * dim + a) * dim + b] += v;
        B[(std::size_t(g) * dim + b) * dim + a] -= v;
    };
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            for (int c = 0; c < n; ++c) {
                if (b > a) set(c, a, b, f.Cc(c, a, b));             // [Z_a, Z_b]
                set(c, a, n + b, f.Dc(c, a, b));                    // [Z_a, Zbar_b] -> Z
                set(n + c, a, n + b, f.Ec(c, a, b));                // [Z_a, Zbar_b] -> Zbar
                if (b > a) set(n + c, n + a, n + b, std::conj(f.Cc(c, a, b)));
            }
        }
    return B;
}

inline int bar_count(const std::vector<int>& idx, int n) {
    int c = 0;
    for (int a : idx)
        if (a >= n) ++c;
    return c;
}

} // namespace detail

/// Chevalley-Eilenberg differential of an invariant form:
/// (d phi)(W_0..W_k) = sum_{p<q} (-1)^{p+q} phi([W_p,W_q], ..., no W_p, W_q ...).
inline InvariantForm ce_differential(const InvariantForm& phi, const std::vector<cplx>& B) {
    const int dim = phi.dim;
    InvariantForm out(dim, phi.degree + 1);
    std::vector<int> idx(std::size_t(out.degree), 0);
    std::vector<int> sub(std::size_t(phi.degree), 0);
    std::size_t total = out.comps.size();
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        for (int s = out.degree - 1; s >= 0; --s) {
            idx[std::size_t(s)] = int(rem % dim);
            rem /= dim;
        }
        cplx acc(0, 0);
        for (int p = 0; p < out.degree; ++p)
            for (int q = p + 1; q < out.degree; ++q) {
                // sub-tuple: (gamma, idx without p and q)
                int w = 1;
                for (int s = 0; s < out.degree; ++s) {
                    if (s == p || s == q) continue;
                    sub[std::size_t(w)] = idx[std::size_t(s)];
                    ++w;
                }
                double sgn = ((p + q) % 2 == 1) ? 1.0 : -1.0;
                for (int gmm = 0; gmm < dim; ++gmm) {
                    cplx b = B[(std::size_t(gmm) * dim + idx[std::size_t(p)]) * dim +
                               idx[std::size_t(q)]];
                    if (b == cplx(0, 0)) continue;
                    sub[0] = gmm;
                    acc += sgn * b * phi.at(sub);
                }
            }
        out.comps[c] = acc;
    }
    return out;
}

/// Keep only components whose index tuple has the given number of barred slots.
inline InvariantForm project_bar_count(const InvariantForm& phi, int n, int barred) {
    InvariantForm out(phi.dim, phi.degree);
    std::vector<int> idx(std::size_t(phi.degree), 0);
    for (std::size_t c = 0; c < phi.comps.size(); ++c) {
        std::size_t rem = c;
        for (int s = phi.degree - 1; s >= 0; --s) {
            idx[std::size_t(s)] = int(rem % phi.dim);
            rem /= phi.dim;
        }
        if (detail::bar_count(idx, n) == barred) out.comps[c] = phi.comps[c];
    }
    return out;
}

/// i d dbar omega_g as an invariant (2,2)-form.
inline InvariantForm skt_form(const ComplexFrame& f, const Eigen::MatrixXcd& g,
                              const std::vector<cplx>& B) {
    const int n = f.n;
    const int dim = 2 * n;
    InvariantForm omega(dim, 2);
    std::vector<int> idx(2);
    const cplx I(0, 1);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            idx[0] = a;
            idx[1] = n + b;
            omega.at(idx) = I * g(a, b);
            idx[0] = n + b;
            idx[1] = a;
            omega.at(idx) = -I * g(a, b);
        }
    InvariantForm del_omega = project_bar_count(ce_differential(omega, B), n, 1);
    InvariantForm dbar_del = project_bar_count(ce_differential(del_omega, B), n, 2);
    // i d dbar = -i dbar d
    for (auto& v : dbar_del.comps) v *= cplx(0, -1);
    return dbar_del;
}

/// Frobenius-squared over strictly increasing index tuples (frame-fixed norm,
/// so r(c g) = c^2 r(g)).
inline double skt_residual(const ComplexFrame& f, const Eigen::MatrixXcd& g,
                           const std::vector<cplx>& B) {
    InvariantForm sigma = skt_form(f, g, B);
    const int dim = sigma.dim;
    double r = 0.0;
    std::vector<int> idx(4);
    for (idx[0] = 0; idx[0] < dim; ++idx[0])
        for (idx[1] = idx[0] + 1; idx[1] < dim; ++idx[1])
            for (idx[2] = idx[1] + 1; idx[2] < dim; ++idx[2])
                for (idx[3] = idx[2] + 1; idx[3] < dim; ++idx[3])
                    r += std::norm(sigma.at(idx));
    return r;
}

// ---------------------------------------------------------------------------
// Invariant-metric ODE flow
// ---------------------------------------------------------------------------

struct OdeSample {
    double t = 0.0;
    Eigen::MatrixXcd g;
    double T_norm_sq = 0.0;
    double det = 0.0;
    double min_eig = 0.0;
    double max_eig = 0.0;
    double rhs_norm = 0.0;
};

struct OdeConfig {
    double dt = 1e-3;
    double t_max = 1.0;
    int max_steps = 100000;
    int cadence = 1;
    double eig_floor = 1e-12;
    double eig_cap = 1e12;
};

struct OdeResult {
    std::vector<OdeSample> trajectory;
    bool degenerate = false;
    double degenerate_t = 0.0;
    std::string note;
};

inline Eigen::MatrixXcd invariant_pcf_rhs(const ComplexFrame& f, const Eigen::MatrixXcd& g) {
    InvariantGeometry geo = invariant_geometry(f, g);
    return (geo.Q - geo.S).eval();
}

/// RK4 on dg/dt = -S + Q restricted to invariant metrics.
inline OdeResult ode_flow(const ComplexFrame& f, const Eigen::MatrixXcd& g0,
                          const OdeConfig& cfg) {
    OdeResult out;
    Eigen::MatrixXcd g = g0;
    double t = 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    auto sample = [&](double rhs_norm) {
        es.compute(g, Eigen::EigenvaluesOnly);
        OdeSample s;
        s.t = t;
        s.g = g;
        InvariantGeometry geo = invariant_geometry(f, g);
        s.T_norm_sq = geo.T_norm_sq;
        s.det = g.determinant().real();
        s.min_eig = es.eigenvalues().minCoeff();
        s.max_eig = es.eigenvalues().maxCoeff();
        s.rhs_norm = rhs_norm;
        out.trajectory.push_back(std::move(s));
        return s.min_eig > cfg.eig_floor && s.max_eig < cfg.eig_cap;
    };
    if (!sample(invariant_pcf_rhs(f, g).cwiseAbs().maxCoeff())) {
        out.degenerate = true;
        out.degenerate_t = 0.0;
        out.note = "initial metric degenerate";
        return out;
    }
    for (int step = 0; step < cfg.max_steps && t < cfg.t_max; ++step) {
        double dt = std::min(cfg.dt, cfg.t_max - t);
        if (dt < 1e-9 * cfg.dt) break; // avoid a degenerate rounded-off last step
        Eigen::MatrixXcd k1 = invariant_pcf_rhs(f, g);
        Eigen::MatrixXcd k2 = invariant_pcf_rhs(f, (g + 0.5 * dt * k1).eval());
        Eigen::MatrixXcd k3 = invariant_pcf_rhs(f, (g + 0.5 * dt * k2).eval());
        Eigen::MatrixXcd k4 = invariant_pcf_rhs(f, (g + dt * k3).eval());
        g += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        g = 0.5 * (g + g.adjoint().eval());
        t += dt;
        if (!g.allFinite()) {
            out.degenerate = true;
            out.degenerate_t = t;
            out.note = "non-finite values";
            break;
        }
        if ((step + 1) % cfg.cadence == 0 || t >= cfg.t_max) {
            if (!sample(invariant_pcf_rhs(f, g).cwiseAbs().maxCoeff())) {
                out.degenerate = true;
                out.degenerate_t = t;
                out.note = "eigenvalue out of range";
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SKT existence scan
// ---------------------------------------------------------------------------

struct ScanConfig {
    int starts = 100;
    int max_iters = 400;
    double grad_tol = 1e-10;
    double fd_step = 1e-6;
};

struct ScanResultHomog {
    double min_residual = 1e300;
    Eigen::MatrixXcd witness;
    std::vector<double> per_start;
    int converged_starts = 0;
};

namespace detail {

/// Cholesky-type parameterization: n real log-diagonal entries followed by
/// the complex strict lower triangle, giving g = L L^dagger (det-normalized).
inline Eigen::MatrixXcd metric_from_params(const std::vector<double>& p, int n) {
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) L(i, i) = std::exp(p[k++]);
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            double re = p[k++];
            double im = p[k++];
            L(i, j) = cplx(re, im);
        }
    Eigen::MatrixXcd g = L * L.adjoint();
    double det = g.determinant().real();
    g /= std::pow(det, 1.0 / n);
    return g;
}

inline std::size_t param_count(int n) { return std::size_t(n) + std::size_t(n) * (n - 1); }

} // namespace detail

/// Multi-start projected gradient descent of r(g) = ||i d dbar omega_g||^2 over
/// det-normalized positive Hermitian invariant metrics. The scan is evidence,
/// not proof: it reports the smallest residual found and the witness metric.
inline ScanResultHomog skt_residual_scan(const ComplexFrame& f, const ScanConfig& cfg,
                                         std::uint64_t seed) {
    std::vector<cplx> B = detail::complexified_bracket(f);
    const int n = f.n;
    const std::size_t np = detail::param_count(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.6);

    ScanResultHomog out;
    auto value = [&](const std::vector<double>& p) {
        return skt_residual(f, detail::metric_from_params(p, n), B);
    };

    for (int s = 0; s < cfg.starts; ++s) {
        std::vector<double> p(np);
        for (auto& x : p) x = gauss(rng);
        double v = value(p);
        bool converged = false;
        double step_len = 0.1;
        std::vector<double> grad(np), trial(np);
        for (int it = 0; it < cfg.max_iters; ++it) {
            double gn = 0.0;
            for (std::size_t k = 0; k < np; ++k) {
                trial = p;
                trial[k] += cfg.fd_step;
                double vp = value(trial);
                trial[k] -= 2.0 * cfg.fd_step;
                double vm = value(trial);
                grad[k] = (vp - vm) / (2.0 * cfg.fd_step);
                gn += grad[k] * grad[k];
            }
            gn = std::sqrt(gn);
            if (gn < cfg.grad_tol || v < 1e-24) {
                converged = true;
                break;
            }
            // backtracking line search along -grad
            bool moved = false;
            double len = step_len;
            for (int bt = 0; bt < 30; ++bt) {
                for (std::size_t k = 0; k < np; ++k) trial[k] = p[k] - len * grad[k] / gn;
                double vt = value(trial);
                if (vt < v - 1e-4 * len * gn) {
                    p = trial;
                    v = vt;
                    step_len = std::min(len * 2.0, 1.0);
                    moved = true;
                    break;
                }
                len *= 0.5;
            }
            if (!moved) {
                converged = true;
                break;
            }
        }
        out.per_start.push_back(v);
        if (converged) ++out.converged_starts;
        if (v < out.min_residual) {
            out.min_residual = v;
            out.witness = detail::metric_from_params(p, n);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Catalog files
// ---------------------------------------------------------------------------

/// Parse a catalog file:
///   format 1
///   name <id>
///   dim <2n>
///   c i j k <value>     # [e_i, e_j] has component <value> along e_k (1-based)
///   J i j <value>       # J e_j has component <value> along e_i (1-based)
inline LieAlgebraSpec parse_algebra_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open algebra file: " + path);
    LieAlgebraSpec spec;
    bool have_dim = false;
    int lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ss(line);
        std::string kw;
        if (!(ss >> kw)) continue;
        if (kw == "format") {
            int v;
            if (!(ss >> v) || v != 1)
                throw ConfigError("algebra file: unsupported format version", lineno);
        } else if (kw == "name") {
            ss >> spec.name;
        } else if (kw == "dim") {
            if (!(ss >> spec.dim) || spec.dim < 2 || spec.dim % 2 != 0)
                throw ConfigError("algebra file: bad dim", lineno);
            spec.c.assign(std::size_t(spec.dim) * spec.dim * spec.dim, 0.0);
            spec.J = Eigen::MatrixXd::Zero(spec.dim, spec.dim);
            have_dim = true;
        } else if (kw == "c") {
            if (!have_dim) throw ConfigError("algebra file: 'c' before 'dim'", lineno);
            int i, j, k;
            double v;
            if (!(ss >> i >> j >> k >> v))
                throw ConfigError("algebra file: malformed 'c' line", lineno);
            if (i < 1 || j < 1 || k < 1 || i > spec.dim || j > spec.dim || k > spec.dim)
                throw ConfigError("algebra file: index out of range", lineno);
            if (i == j) throw ConfigError("algebra file: c with i == j", lineno);
            spec.set_c(k - 1, i - 1, j - 1, v);
        } else if (kw == "J") {
            if (!have_dim) throw ConfigError("algebra file: 'J' before 'dim'", lineno);
            int i, j;
            double v;
            if (!(ss >> i >> j >> v))
                throw ConfigError("algebra file: malformed 'J' line", lineno);
            if (i < 1 || j < 1 || i > spec.dim || j > spec.dim)
                throw ConfigError("algebra file: index out of range", lineno);
            spec.J(i - 1, j - 1) = v;
        } else {
            throw ConfigError("algebra file: unknown directive '" + kw + "'", lineno);
        }
    }
    if (!have_dim) throw ConfigError("algebra file: missing 'dim'", 0);
    spec.validate();
    return spec;
}

} // namespace pcflab
