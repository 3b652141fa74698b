#pragma once

// Test-only oracles, independent of the spectral implementation path:
// second-order centered finite differences on the periodic grid, and naive
// loop-nest contractions.

#include <random>

#include "pcflab/geometry.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/metric.hpp"
#include "pcflab/spectral.hpp"
#include "pcflab/tensor.hpp"

namespace oracles {

using namespace pcflab;

/// Centered difference along one real dimension.
inline Field fd_real(const GridSpec& grid, const Field& f, int d) {
    Field out = grid.make_field();
    const double inv2h = 0.5 * grid.N;
    for (std::size_t p = 0; p < f.size(); ++p)
        out[p] = (f[grid.shift(p, d, +1)] - f[grid.shift(p, d, -1)]) * inv2h;
    return out;
}

/// d/dz^j (barred=false) or d/dzbar^j (barred=true), second order.
inline Field fd_dz(const GridSpec& grid, const Field& f, int j, bool barred) {
    Field dx = fd_real(grid, f, 2 * j);
    Field dy = fd_real(grid, f, 2 * j + 1);
    Field out = grid.make_field();
    const cplx c = barred ? cplx(0.0, 0.5) : cplx(0.0, -0.5);
    for (std::size_t p = 0; p < f.size(); ++p) out[p] = 0.5 * dx[p] + c * dy[p];
    return out;
}

inline double fd_tol(const GridSpec& grid, double scale = 1.0) {
    double h = grid.h();
    return 40.0 * scale * h * h;
}

/// Random band-limited real or complex scalar field from a few Fourier modes.
inline Field random_mode_field(const GridSpec& grid, std::mt19937_64& rng, double amp,
                               int max_freq, bool make_real) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> pick(-max_freq, max_freq);
    Field out = grid.make_field();
    std::vector<int> idx(std::size_t(grid.dims()));
    for (int m = 0; m < 4; ++m) {
        std::vector<int> k(std::size_t(grid.dims()));
        bool nz = false;
        for (auto& v : k) {
            v = pick(rng);
            nz = nz || v != 0;
        }
        if (!nz) k[0] = 1;
        cplx a = amp * cplx(gauss(rng), gauss(rng));
        for (std::size_t p = 0; p < out.size(); ++p) {
            grid.unflatten(p, idx.data());
            double phase = 0.0;
            for (int d = 0; d < grid.dims(); ++d)
                phase += double(k[std::size_t(d)]) * idx[std::size_t(d)] / grid.N;
            cplx e = std::exp(cplx(0.0, 2.0 * kPi * phase));
            out[p] += make_real ? cplx((a * e).real(), 0.0) : a * e;
        }
    }
    return out;
}

/// Single exponential mode exp(2 pi i k.(x,y)).
inline Field mode_field(const GridSpec& grid, const std::vector<int>& k, cplx amp = 1.0) {
    Field out = grid.make_field();
    std::vector<int> idx(std::size_t(grid.dims()));
    for (std::size_t p = 0; p < out.size(); ++p) {
        grid.unflatten(p, idx.data());
        double phase = 0.0;
        for (int d = 0; d < grid.dims(); ++d)
            phase += double(k[std::size_t(d)]) * idx[std::size_t(d)] / grid.N;
        out[p] = amp * std::exp(cplx(0.0, 2.0 * kPi * phase));
    }
    return out;
}

/// Random Hermitian positive metric field: identity + small band-limited
/// Hermitian perturbation (NOT pluriclosed in general).
inline MetricField random_hermitian_metric(const GridSpec& grid, std::mt19937_64& rng,
                                           double amp, int max_freq = 2) {
    MetricField g(grid, /*flat=*/true);
    for (int i = 0; i < grid.n; ++i) {
        Field re = random_mode_field(grid, rng, amp, max_freq, /*real=*/true);
        for (std::size_t p = 0; p < re.size(); ++p) g.comp(i, i)[p] += re[p];
        for (int j = i + 1; j < grid.n; ++j) {
            Field z = random_mode_field(grid, rng, amp, max_freq, /*real=*/false);
            for (std::size_t p = 0; p < z.size(); ++p) {
                g.comp(i, j)[p] += z[p];
                g.comp(j, i)[p] += std::conj(z[p]);
            }
        }
    }
    g.hermitize();
    return g;
}

/// Naive O(n^6) evaluation of Q at one grid point.
inline cplx naive_Q_at(const GeometryData& geo, int i, int j, std::size_t p) {
    const int n = geo.grid.n;
    cplx q(0, 0);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            for (int m = 0; m < n; ++m)
                for (int nn = 0; nn < n; ++nn)
                    q += geo.mp.gi(l, k)[p] * geo.mp.gi(nn, m)[p] *
                         geo.torsion.at({i, k, nn})[p] * std::conj(geo.torsion.at({j, l, m})[p]);
    return q;
}

} // namespace oracles
