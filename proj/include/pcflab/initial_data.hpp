#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/geometry.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/metric.hpp"
#include "pcflab/spectral.hpp"
#include "pcflab/tensor.hpp"

namespace pcflab {

/// One Fourier mode of a (1,0)-form: amp * exp(2 pi i freq.(x,y)) dz^{comp}.
struct AlphaMode {
    int comp = 0;               ///< which dz^i
    std::vector<int> freq;      ///< 2n integers, ordered (kx1, ky1, kx2, ky2, ...)
    cplx amp = cplx(0.0, 0.0);
};

/// (1,0)-form potential with its construction metadata.
struct PotentialForm {
    TensorField alpha; ///< signature {co}
    double amplitude = 0.0;

    explicit PotentialForm(const GridSpec& grid) : alpha(grid, {co_slot()}) {}

    void add_mode(const AlphaMode& m) {
        const GridSpec& grid = alpha.grid();
        if (int(m.freq.size()) != grid.dims())
            throw Error("PotentialForm: frequency vector must have 2n entries");
        if (m.comp < 0 || m.comp >= grid.n) throw Error("PotentialForm: bad component");
        Field& f = alpha.at({m.comp});
        std::vector<int> idx(std::size_t(grid.dims()));
        for (std::size_t p = 0; p < f.size(); ++p) {
            grid.unflatten(p, idx.data());
            double phase = 0.0;
            for (int d = 0; d < grid.dims(); ++d)
                phase += double(m.freq[std::size_t(d)]) * double(idx[std::size_t(d)]) / grid.N;
            f[p] += m.amp * std::exp(cplx(0.0, 2.0 * kPi * phase));
        }
        amplitude = std::max(amplitude, std::abs(m.amp));
    }
};

/// omega0 and the fixed (2,0)-form eta = -d alpha0 with d omega0 = dbar eta.
struct InitialData {
    MetricField omega0;
    TensorField eta;       ///< signature {co, co}, antisymmetric
    PotentialForm alpha0;
};

/// base + the Hermitian perturbation of dbar(alpha) + d(conj alpha):
/// g_{i jbar} = base_{i jbar} + i ( d_jbar alpha_i - d_i conj(alpha_j) ).
inline MetricField apply_potential(const SpectralEngine& eng, const MetricField& base,
                                   const TensorField& alpha) {
    const GridSpec& grid = base.grid();
    const int n = grid.n;
    MetricField g = base;
    std::vector<Field> spec{std::size_t(n), Field{}};
    for (int i = 0; i < n; ++i) spec[std::size_t(i)] = eng.fft(alpha.at({i}));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Field s = spec[std::size_t(i)];
            eng.apply_derivative(s, j, true);
            Field dbar_ai = eng.ifft(s); // d_jbar alpha_i
            Field t = spec[std::size_t(j)];
            eng.apply_derivative(t, i, true); // d_ibar alpha_j; conj gives d_i conj(alpha_j)
            Field d_aj = eng.ifft(t);
            Field& out = g.comp(i, j);
            const cplx I(0.0, 1.0);
            for (std::size_t p = 0; p < out.size(); ++p)
                out[p] += I * (dbar_ai[p] - std::conj(d_aj[p]));
        }
    g.hermitize();
    return g;
}

/// eta = -d alpha as an antisymmetric (2,0)-form: eta_{ij} = -(d_i a_j - d_j a_i).
inline TensorField del_alpha_two_form(const SpectralEngine& eng, const TensorField& alpha,
                                      double sign = 1.0) {
    const GridSpec& grid = alpha.grid();
    const int n = grid.n;
    TensorField out(grid, {co_slot(), co_slot()});
    std::vector<Field> spec{std::size_t(n), Field{}};
    for (int i = 0; i < n; ++i) spec[std::size_t(i)] = eng.fft(alpha.at({i}));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Field a = spec[std::size_t(j)];
            eng.apply_derivative(a, i, false); // d_i alpha_j
            Field b = spec[std::size_t(i)];
            eng.apply_derivative(b, j, false); // d_j alpha_i
            Field da = eng.ifft(a), db = eng.ifft(b);
            Field& o = out.at({i, j});
            for (std::size_t p = 0; p < o.size(); ++p) o[p] = sign * (da[p] - db[p]);
        }
    return out;
}

/// omega0 = base + dbar alpha0 + d conj(alpha0), with positivity rejection.
/// Throws if the minimum eigenvalue drops below half the background's.
inline InitialData make_pluriclosed_initial(const SpectralEngine& eng,
                                            const PotentialForm& alpha0,
                                            const MetricField* background = nullptr) {
    const GridSpec& grid = alpha0.alpha.grid();
    MetricField base = background ? *background : MetricField(grid, /*flat=*/true);
    double base_min, base_worst;
    {
        std::size_t arg;
        if (!metric_min_eig(base, base_min, arg))
            throw DegenerateMetricError("background metric not positive", arg, base_min);
        base_worst = base_min;
    }
    InitialData out{apply_potential(eng, base, alpha0.alpha),
                    del_alpha_two_form(eng, alpha0.alpha, -1.0), alpha0};
    double min_eig;
    std::size_t argmin;
    metric_min_eig(out.omega0, min_eig, argmin);
    if (!(min_eig > 0.5 * base_worst))
        throw DegenerateMetricError(
            "initial potential violates positivity (min eigenvalue " +
                std::to_string(min_eig) + " < half of background " +
                std::to_string(base_worst) + ")",
            argmin, min_eig);
    return out;
}

/// Constant holomorphic frame sections of (T*_{1,0})^{(x)p} or (T_{1,0})^{(x)p}.
/// Every tensor-product section appears once (n^p sections, unit component).
inline std::vector<TensorField> holomorphic_frame_sections(const GridSpec& grid,
                                                           Variance variance, int p) {
    if (p < 1) throw Error("holomorphic_frame_sections: p must be >= 1");
    Signature sig(std::size_t(p),
                  variance == Variance::Co ? co_slot() : contra_slot());
    std::vector<TensorField> out;
    std::size_t count = 1;
    for (int s = 0; s < p; ++s) count *= std::size_t(grid.n);
    out.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        TensorField sec(grid, sig);
        for (auto& v : sec.comp(c)) v = cplx(1.0, 0.0);
        out.push_back(std::move(sec));
    }
    return out;
}

/// Random band-limited pluriclosed metric: constant Hermitian background near the
/// identity plus dbar alpha + d conj(alpha) for a random low-frequency alpha.
/// `scale` controls the metric perturbation size (sup-norm, roughly).
inline InitialData random_pluriclosed_metric(const SpectralEngine& eng, std::mt19937_64& rng,
                                             double scale = 0.02, int max_freq = 2,
                                             bool random_background = true) {
    const GridSpec& grid = eng.grid();
    const int n = grid.n;
    std::normal_distribution<double> gauss(0.0, 1.0);

    MetricField base(grid, /*flat=*/true);
    if (random_background) {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                if (i == j) {
                    double d = 0.1 * scale * gauss(rng);
                    for (auto& v : base.comp(i, i)) v += d;
                } else {
                    cplx d = 0.1 * scale * cplx(gauss(rng), gauss(rng));
                    for (auto& v : base.comp(i, j)) v += d;
                    for (auto& v : base.comp(j, i)) v += std::conj(d);
                }
            }
    }

    const int K = std::min(max_freq, eng.cutoff());
    PotentialForm alpha(grid);
    std::vector<int> freq(std::size_t(grid.dims()), 0);
    // a handful of random modes per component
    for (int comp = 0; comp < n; ++comp) {
        for (int m = 0; m < 3; ++m) {
            bool nonzero = false;
            for (int d = 0; d < grid.dims(); ++d) {
                freq[std::size_t(d)] =
                    int(std::lround(gauss(rng))) % (K + 1);
                if (freq[std::size_t(d)] != 0) nonzero = true;
            }
            if (!nonzero) freq[0] = 1;
            AlphaMode mode;
            mode.comp = comp;
            mode.freq = freq;
            mode.amp = scale / (4.0 * kPi) * cplx(gauss(rng), gauss(rng));
            alpha.add_mode(mode);
        }
    }
    return make_pluriclosed_initial(eng, alpha, &base);
}

} // namespace pcflab
