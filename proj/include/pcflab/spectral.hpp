#pragma once

#include <fftw3.h>

#include <cstring>
#include <memory>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/grid.hpp"

namespace pcflab {

/// Fourier-space derivatives on the periodic grid.
///
/// Conventions: z^j = x^j + i y^j with unit periods, so on the mode
/// exp(2 pi i (k.x + m.y)) the holomorphic derivative d/dz^j = (d/dx^j - i d/dy^j)/2
/// acts as multiplication by pi*i*(k_j - i m_j) and d/dzbar^j by pi*i*(k_j + i m_j).
///
/// Nonlinear products are kept alias-free by sharp truncation to |freq| <= cutoff()
/// per real dimension, with cutoff = floor((N-1)/3) so that sums of two kept
/// frequencies never wrap into the kept band.
class SpectralEngine {
public:
    explicit SpectralEngine(const GridSpec& grid) : grid_(grid) {
        const int rank = grid_.dims();
        std::vector<int> extents(std::size_t(rank), grid_.N);
        buf_ = fftw_alloc_complex(grid_.total());
        plan_fwd_ =
            fftw_plan_dft(rank, extents.data(), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        plan_bwd_ =
            fftw_plan_dft(rank, extents.data(), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        freq_.resize(grid_.N);
        for (int i = 0; i < grid_.N; ++i) freq_[i] = (i <= grid_.N / 2) ? i : i - grid_.N;
        // zero the Nyquist derivative symbol
        nyquist_ = grid_.N / 2;
        // per-point frequency tables and the dealias mask
        const int K = cutoff();
        freq_table_.assign(std::size_t(rank), std::vector<int>(grid_.total()));
        mask_.assign(grid_.total(), 1);
        std::vector<int> idx(std::size_t(rank), 0);
        for (std::size_t p = 0; p < grid_.total(); ++p) {
            grid_.unflatten(p, idx.data());
            for (int d = 0; d < rank; ++d) {
                int k = (idx[std::size_t(d)] == nyquist_) ? 0 : freq_[idx[std::size_t(d)]];
                freq_table_[std::size_t(d)][p] = k;
                int kraw = freq_[idx[std::size_t(d)]];
                if (kraw > K || kraw < -K) mask_[p] = 0;
            }
        }
    }

    ~SpectralEngine() {
        fftw_destroy_plan(plan_fwd_);
        fftw_destroy_plan(plan_bwd_);
        fftw_free(buf_);
    }

    SpectralEngine(const SpectralEngine&) = delete;
    SpectralEngine& operator=(const SpectralEngine&) = delete;

    const GridSpec& grid() const { return grid_; }

    int cutoff() const { return (grid_.N - 1) / 3; }

    /// Forward transform (unnormalized).
    Field fft(const Field& f) const {
        check(f);
        cplx* b = reinterpret_cast<cplx*>(buf_);
        std::copy(f.begin(), f.end(), b);
        fftw_execute(plan_fwd_);
        return Field(b, b + grid_.total());
    }

    /// Inverse transform with 1/total normalization.
    Field ifft(const Field& spec) const {
        check(spec);
        cplx* b = reinterpret_cast<cplx*>(buf_);
        std::copy(spec.begin(), spec.end(), b);
        fftw_execute(plan_bwd_);
        Field out(grid_.total());
        const double s = 1.0 / double(grid_.total());
        for (std::size_t p = 0; p < out.size(); ++p) out[p] = b[p] * s;
        return out;
    }

    /// Integer frequency along one real dimension from a per-dim index.
    int freq(int i) const { return freq_[i]; }

    /// Multiply a spectrum in place by the symbol of d/dz^j (barred=false)
    /// or d/dzbar^j (barred=true), j in [0, n).
    void apply_derivative(Field& spec, int j, bool barred) const {
        check(spec);
        const int* kx = freq_table_[std::size_t(2 * j)].data();
        const int* ky = freq_table_[std::size_t(2 * j + 1)].data();
        const double s = barred ? -1.0 : 1.0;
        // pi*i*(kx -+ i ky) = pi*(+-ky + i kx)
        for (std::size_t p = 0; p < spec.size(); ++p)
            spec[p] *= cplx(s * kPi * ky[p], kPi * kx[p]);
    }

    /// Zero all modes with any |frequency| above cutoff().
    void apply_dealias(Field& spec) const {
        check(spec);
        for (std::size_t p = 0; p < spec.size(); ++p)
            if (!mask_[p]) spec[p] = cplx(0.0, 0.0);
    }

    /// First derivative of a physical-space field.
    Field derivative(const Field& f, int j, bool barred) const {
        Field s = fft(f);
        apply_derivative(s, j, barred);
        return ifft(s);
    }

    /// Mixed second derivative d_i d_{jbar} (or any pair).
    Field derivative2(const Field& f, int i, bool ibarred, int j, bool jbarred) const {
        Field s = fft(f);
        apply_derivative(s, i, ibarred);
        apply_derivative(s, j, jbarred);
        return ifft(s);
    }

    /// 2/3-rule projection of a physical-space field.
    Field dealias(const Field& f) const {
        Field s = fft(f);
        apply_dealias(s);
        return ifft(s);
    }

    void dealias_in_place(Field& f) const { f = dealias(f); }

    /// True if all modes above cutoff vanish to the given tolerance.
    bool is_band_limited(const Field& f, double tol = 1e-12) const {
        Field s = fft(f);
        const double scale = double(grid_.total());
        for (std::size_t p = 0; p < s.size(); ++p)
            if (!mask_[p] && std::abs(s[p]) / scale > tol) return false;
        return true;
    }

private:
    std::size_t bytes() const { return grid_.total() * sizeof(cplx); }
    void check(const Field& f) const {
        if (f.size() != grid_.total()) throw Error("SpectralEngine: field size mismatch");
    }

    GridSpec grid_;
    fftw_complex* buf_ = nullptr;
    fftw_plan plan_fwd_{};
    fftw_plan plan_bwd_{};
    std::vector<int> freq_;
    std::vector<std::vector<int>> freq_table_;
    std::vector<unsigned char> mask_;
    int nyquist_ = 0;
};

} // namespace pcflab
