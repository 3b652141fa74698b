#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "pcflab/common.hpp"

namespace pcflab {

/// Periodic grid on the complex torus C^n / Z^{2n}, unit periods.
///
/// Real coordinates are ordered (x^1, y^1, x^2, y^2, ...) with z^j = x^j + i y^j,
/// N points per real dimension, row-major linear indexing with x^1 slowest.
struct GridSpec {
    int n = 2;  ///< complex dimension
    int N = 12; ///< points per real dimension

    static constexpr std::size_t kMaxPoints = std::size_t(1) << 24;

    GridSpec() : GridSpec(2, 12) {}
    GridSpec(int n_, int N_) : n(n_), N(N_) {
        if (n < 1) throw Error("GridSpec: complex dimension must be >= 1");
        if (N < 8 || N % 2 != 0) throw Error("GridSpec: N must be even and >= 8");
        std::size_t total = 1;
        for (int d = 0; d < 2 * n; ++d) {
            total *= std::size_t(N);
            if (total > kMaxPoints) throw Error("GridSpec: grid exceeds memory budget");
        }
        total_ = total;
    }

    int dims() const { return 2 * n; }
    std::size_t total() const { return total_; }

    /// Grid spacing per real dimension.
    double h() const { return 1.0 / N; }

    /// Linear index from per-dimension indices (size 2n), row-major.
    std::size_t flatten(const int* idx) const {
        std::size_t p = 0;
        for (int d = 0; d < dims(); ++d) p = p * N + std::size_t(idx[d]);
        return p;
    }

    /// Per-dimension indices from linear index.
    void unflatten(std::size_t p, int* idx) const {
        for (int d = dims() - 1; d >= 0; --d) {
            idx[d] = int(p % N);
            p /= N;
        }
    }

    /// Step linear index by +/-1 (periodic) along real dimension d.
    std::size_t shift(std::size_t p, int d, int delta) const {
        std::size_t stride = 1;
        for (int e = dims() - 1; e > d; --e) stride *= N;
        std::size_t line = (p / stride) % N;
        std::size_t base = p - line * stride;
        std::size_t moved = (line + std::size_t(N + (delta % N))) % N;
        return base + moved * stride;
    }

    Field make_field(cplx fill = cplx(0.0, 0.0)) const { return Field(total(), fill); }

    bool operator==(const GridSpec& o) const { return n == o.n && N == o.N; }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }

private:
    std::size_t total_ = 0;
};

struct ScanResult {
    double sup = 0.0;
    std::size_t argmax = 0;
    double inf = 0.0;
    std::size_t argmin = 0;
};

/// Deterministic sup/inf scan of the real part of a field.
/// Ties break toward the lowest linear index (strict comparisons).
inline ScanResult sup_inf_scan(const Field& f) {
    ScanResult r;
    if (f.empty()) return r;
    r.sup = r.inf = f[0].real();
    for (std::size_t p = 1; p < f.size(); ++p) {
        double v = f[p].real();
        if (v > r.sup) { r.sup = v; r.argmax = p; }
        if (v < r.inf) { r.inf = v; r.argmin = p; }
    }
    return r;
}

inline double sup_abs(const Field& f) {
    double m = 0.0;
    for (const cplx& v : f) m = std::max(m, std::abs(v));
    return m;
}

} // namespace pcflab
