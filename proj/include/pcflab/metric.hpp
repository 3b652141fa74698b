#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/tensor.hpp"

namespace pcflab {

/// Positive-definite Hermitian metric field g_{i jbar} on the grid.
///
/// Component (i,j) stores g_{i jbar}; Hermitian means g(i,j) = conj(g(j,i)).
/// The flat metric is the identity matrix at every point.
class MetricField {
public:
    MetricField() = default;
    explicit MetricField(const GridSpec& grid, bool flat = false)
        : grid_(grid), comps_(std::size_t(grid.n) * grid.n) {
        for (auto& c : comps_) c = grid_.make_field();
        if (flat)
            for (int i = 0; i < grid_.n; ++i)
                for (auto& v : comp(i, i)) v = cplx(1.0, 0.0);
    }

    const GridSpec& grid() const { return grid_; }
    int n() const { return grid_.n; }

    Field& comp(int i, int j) { return comps_[std::size_t(i) * grid_.n + j]; }
    const Field& comp(int i, int j) const { return comps_[std::size_t(i) * grid_.n + j]; }

    /// Enforce g(i,j) = conj(g(j,i)) exactly (IEEE-exact symmetrization).
    void hermitize() {
        for (int i = 0; i < n(); ++i) {
            for (auto& v : comp(i, i)) v = cplx(v.real(), 0.0);
            for (int j = i + 1; j < n(); ++j) {
                Field& a = comp(i, j);
                Field& b = comp(j, i);
                for (std::size_t p = 0; p < a.size(); ++p) {
                    cplx m = 0.5 * (a[p] + std::conj(b[p]));
                    a[p] = m;
                    b[p] = std::conj(m);
                }
            }
        }
    }

    double hermitian_defect() const {
        double m = 0.0;
        for (int i = 0; i < n(); ++i)
            for (int j = 0; j < n(); ++j) {
                const Field& a = comp(i, j);
                const Field& b = comp(j, i);
                for (std::size_t p = 0; p < a.size(); ++p)
                    m = std::max(m, std::abs(a[p] - std::conj(b[p])));
            }
        return m;
    }

    void scale(double a) {
        for (auto& c : comps_)
            for (auto& v : c) v *= a;
    }

    void axpy(double a, const MetricField& other) {
        for (std::size_t c = 0; c < comps_.size(); ++c)
            for (std::size_t p = 0; p < comps_[c].size(); ++p)
                comps_[c][p] += a * other.comps_[c][p];
    }

    bool finite() const {
        for (const auto& c : comps_)
            for (const auto& v : c)
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

    /// Gather the matrix at one grid point.
    void gather(std::size_t p, cplx* m) const {
        for (int i = 0; i < n(); ++i)
            for (int j = 0; j < n(); ++j) m[std::size_t(i) * n() + j] = comp(i, j)[p];
    }

private:
    GridSpec grid_;
    std::vector<Field> comps_;
};

inline double sup_metric_abs(const MetricField& g) {
    double m = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) m = std::max(m, sup_abs(g.comp(i, j)));
    return m;
}

namespace detail {

/// Hermitian 2x2 eigenvalue bounds (closed form).
inline void herm2_eigs(const cplx* m, double& lo, double& hi) {
    double a = m[0].real(), d = m[3].real();
    double b2 = std::norm(m[1]);
    double tr = a + d;
    double disc = std::sqrt(std::max(0.0, sqr(a - d) + 4.0 * b2));
    lo = 0.5 * (tr - disc);
    hi = 0.5 * (tr + disc);
}

inline cplx det2(const cplx* m) { return m[0] * m[3] - m[1] * m[2]; }

} // namespace detail

/// Pointwise data derived from a metric: inverse, log-determinant, eigenvalue range.
///
/// Inverse components follow the convention ginv(j,i) = g^{jbar i}, i.e. the matrix
/// inverse of [g_{i jbar}] stored with the barred index first, so that
/// sum_j g_{i jbar} * ginv(j,k) = delta_i^k.
struct MetricPointwise {
    GridSpec grid;
    int n = 0;
    std::vector<Field> ginv; ///< ginv[j*n+i] = g^{jbar i}
    Field logdet;            ///< real
    Field det;               ///< real
    std::vector<double> min_eig_pt;
    double min_eig = 0.0;
    std::size_t min_eig_arg = 0;
    double max_eig = 0.0;
    double max_inv_eig = 0.0; ///< sup over points of 1/min_eig

    const Field& gi(int jbar, int i) const { return ginv[std::size_t(jbar) * n + i]; }
};

/// Compute inverse/eigen data; throws DegenerateMetricError if the minimum
/// eigenvalue falls below the degeneracy threshold.
inline MetricPointwise analyze_metric(const MetricField& g,
                                      double degenerate_eig = kDegenerateEig) {
    MetricPointwise out;
    out.grid = g.grid();
    out.n = g.n();
    const int n = g.n();
    const std::size_t total = g.grid().total();
    out.ginv.assign(std::size_t(n) * n, g.grid().make_field());
    out.logdet = g.grid().make_field();
    out.det = g.grid().make_field();
    out.min_eig_pt.assign(total, 0.0);
    out.min_eig = 1e300;
    out.max_eig = -1e300;

    std::vector<cplx> m(std::size_t(n) * n), inv(std::size_t(n) * n);
    Eigen::MatrixXcd em(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;

    for (std::size_t p = 0; p < total; ++p) {
        g.gather(p, m.data());
        double lo, hi;
        cplx det;
        if (n == 1) {
            lo = hi = m[0].real();
            det = m[0];
            if (lo > degenerate_eig) inv[0] = 1.0 / m[0];
        } else if (n == 2) {
            detail::herm2_eigs(m.data(), lo, hi);
            det = detail::det2(m.data());
            if (lo > degenerate_eig) {
                cplx id = 1.0 / det;
                inv[0] = m[3] * id;
                inv[1] = -m[1] * id;
                inv[2] = -m[2] * id;
                inv[3] = m[0] * id;
            }
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) em(i, j) = m[std::size_t(i) * n + j];
            es.compute(em, Eigen::EigenvaluesOnly);
            lo = es.eigenvalues().minCoeff();
            hi = es.eigenvalues().maxCoeff();
            det = em.determinant();
            if (lo > degenerate_eig) {
                Eigen::MatrixXcd ei = em.inverse();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) inv[std::size_t(i) * n + j] = ei(i, j);
            }
        }
        if (!(lo > degenerate_eig)) {
            throw DegenerateMetricError(
                "degenerate metric at grid point " + std::to_string(p) +
                    " (min eigenvalue " + std::to_string(lo) + ")",
                p, lo);
        }
        out.min_eig_pt[p] = lo;
        if (lo < out.min_eig) { out.min_eig = lo; out.min_eig_arg = p; }
        out.max_eig = std::max(out.max_eig, hi);
        out.det[p] = det.real();
        out.logdet[p] = std::log(det.real());
        // inverse transposed into barred-first storage: ginv(j,i) = (g^{-1})[j][i]
        // where (g^{-1})[j][i] solves sum_j g[i][j] (g^{-1})[j][k] = delta.
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) out.ginv[std::size_t(j) * n + i][p] = inv[std::size_t(j) * n + i];
    }
    out.max_inv_eig = 1.0 / out.min_eig;
    return out;
}

/// Min eigenvalue over the grid without throwing (for guards / rejection tests).
inline bool metric_min_eig(const MetricField& g, double& min_eig, std::size_t& argmin) {
    const int n = g.n();
    const std::size_t total = g.grid().total();
    min_eig = 1e300;
    argmin = 0;
    std::vector<cplx> m(std::size_t(n) * n);
    Eigen::MatrixXcd em(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    for (std::size_t p = 0; p < total; ++p) {
        g.gather(p, m.data());
        double lo;
        if (n == 1) {
            lo = m[0].real();
        } else if (n == 2) {
            double hi;
            detail::herm2_eigs(m.data(), lo, hi);
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) em(i, j) = m[std::size_t(i) * n + j];
            es.compute(em, Eigen::EigenvaluesOnly);
            lo = es.eigenvalues().minCoeff();
        }
        if (!std::isfinite(lo)) { min_eig = lo; argmin = p; return false; }
        if (lo < min_eig) { min_eig = lo; argmin = p; }
    }
    return min_eig > kDegenerateEig;
}

} // namespace pcflab
