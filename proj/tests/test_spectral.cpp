#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pcflab/grid.hpp"
#include "pcflab/spectral.hpp"
#include "support/oracles.hpp"

using namespace pcflab;

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(GridSpec(2, 7), Error);  // odd
    CHECK_THROWS_AS(GridSpec(2, 6), Error);  // too small
    CHECK_THROWS_AS(GridSpec(0, 12), Error);
    CHECK_THROWS_AS(GridSpec(4, 64), Error); // memory budget
    GridSpec g(2, 12);
    CHECK(g.total() == 12 * 12 * 12 * 12);
    CHECK(g.dims() == 4);

    // shift round trip
    std::size_t p = 12345;
    for (int d = 0; d < 4; ++d) {
        CHECK(g.shift(g.shift(p, d, 1), d, -1) == p);
        CHECK(g.shift(p, d, 12) == p);
    }
}

TEST_CASE("derivative of a Fourier mode matches the analytic symbol") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    // d_1 exp(2 pi i x^1) = pi i exp(...): the dz-convention factor is 1/2
    Field f = oracles::mode_field(grid, {1, 0, 0, 0});
    Field d = eng.derivative(f, 0, false);
    double worst = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p)
        worst = std::max(worst, std::abs(d[p] - cplx(0.0, kPi) * f[p]));
    CHECK(worst < 1e-12);

    // x^1 = (z^1 + zbar^1)/2, so dbar_1 acts with the same symbol pi*i
    Field db = eng.derivative(f, 0, true);
    worst = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p)
        worst = std::max(worst, std::abs(db[p] - cplx(0.0, kPi) * f[p]));
    CHECK(worst < 1e-12);

    // the other complex direction leaves the mode alone
    CHECK(sup_abs(eng.derivative(f, 1, false)) < 1e-12);
    CHECK(sup_abs(eng.derivative(f, 1, true)) < 1e-12);

    // y-mode: d_1 exp(2 pi i y^1) = pi exp(...), dbar_1 gives -pi
    Field fy = oracles::mode_field(grid, {0, 1, 0, 0});
    Field dy = eng.derivative(fy, 0, false);
    Field dyb = eng.derivative(fy, 0, true);
    worst = 0.0;
    for (std::size_t p = 0; p < fy.size(); ++p) {
        worst = std::max(worst, std::abs(dy[p] - kPi * fy[p]));
        worst = std::max(worst, std::abs(dyb[p] + kPi * fy[p]));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("dbar annihilates holomorphic data") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    // global holomorphic functions on the torus are constants; the holomorphic
    // sections dz^i have constant coefficients, so dbar of either is exactly zero
    Field c = grid.make_field(cplx(2.5, -1.0));
    CHECK(sup_abs(eng.derivative(c, 0, true)) < 1e-14);
    CHECK(sup_abs(eng.derivative(c, 1, true)) < 1e-14);

    std::mt19937_64 rng(11);
    Field f = oracles::random_mode_field(grid, rng, 1.0, 2, false);
    Field a = eng.derivative(f, 1, true);
    Field fc(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) fc[p] = std::conj(f[p]);
    Field b = eng.derivative(fc, 1, false);
    double worst = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p)
        worst = std::max(worst, std::abs(std::conj(a[p]) - b[p]));
    CHECK(worst < 1e-12); // conj(dbar f) = d conj(f)
}

TEST_CASE("mixed flat derivatives commute to machine precision") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    std::mt19937_64 rng(7);
    Field f = oracles::random_mode_field(grid, rng, 1.0, 3, false);
    Field ab = eng.derivative(eng.derivative(f, 0, false), 1, true);
    Field ba = eng.derivative(eng.derivative(f, 1, true), 0, false);
    double worst = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p)
        worst = std::max(worst, std::abs(ab[p] - ba[p]));
    CHECK(worst < 1e-11);
}

TEST_CASE("spectral derivative matches the finite-difference oracle") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    std::mt19937_64 rng(3);
    Field f = oracles::random_mode_field(grid, rng, 0.7, 2, false);
    for (int j = 0; j < 2; ++j)
        for (bool barred : {false, true}) {
            Field spec = eng.derivative(f, j, barred);
            Field fd = oracles::fd_dz(grid, f, j, barred);
            double worst = 0.0;
            for (std::size_t p = 0; p < f.size(); ++p)
                worst = std::max(worst, std::abs(spec[p] - fd[p]));
            // FD is second order with a large constant at these frequencies
            CHECK(worst < 2.0 * kPi * kPi * kPi * 8.0 * grid.h() * grid.h() * 10.0);
            CHECK(worst > 1e-8); // sanity: the oracle is genuinely independent
        }
}

TEST_CASE("dealiasing: Leibniz rule holds on truncated products") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    CHECK(eng.cutoff() == 3);
    std::mt19937_64 rng(5);
    Field f = eng.dealias(oracles::random_mode_field(grid, rng, 0.5, 2, false));
    Field g = eng.dealias(oracles::random_mode_field(grid, rng, 0.5, 2, false));
    Field fg(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) fg[p] = f[p] * g[p];
    // P(d(fg)) == P(df * g + f * dg): both sides filtered
    Field lhs = eng.dealias(eng.derivative(fg, 0, false));
    Field df = eng.derivative(f, 0, false);
    Field dg = eng.derivative(g, 0, false);
    Field rhs(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) rhs[p] = df[p] * g[p] + f[p] * dg[p];
    rhs = eng.dealias(rhs);
    double worst = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p)
        worst = std::max(worst, std::abs(lhs[p] - rhs[p]));
    CHECK(worst < 1e-10);

    // the projection is idempotent and kills the top third
    Field once = eng.dealias(fg);
    Field twice = eng.dealias(once);
    worst = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p)
        worst = std::max(worst, std::abs(once[p] - twice[p]));
    CHECK(worst < 1e-13);
    CHECK(eng.is_band_limited(once));
}

TEST_CASE("sup/inf scan: constants, single modes, and the naive oracle") {
    GridSpec grid(2, 8);
    Field c = grid.make_field(cplx(3.25, 0.0));
    ScanResult r = sup_inf_scan(c);
    CHECK(r.sup == 3.25);
    CHECK(r.inf == 3.25);
    CHECK(r.argmax == 0); // lowest-index tie break
    CHECK(r.argmin == 0);

    // single cosine mode: extremum where the phase vanishes
    Field f = grid.make_field();
    std::vector<int> idx(4);
    for (std::size_t p = 0; p < f.size(); ++p) {
        grid.unflatten(p, idx.data());
        f[p] = std::cos(2.0 * kPi * idx[0] / grid.N);
    }
    r = sup_inf_scan(f);
    CHECK(r.sup == doctest::Approx(1.0));
    CHECK(r.argmax == 0);
    CHECK(r.inf == doctest::Approx(-1.0));

    std::mt19937_64 rng(19);
    Field h = oracles::random_mode_field(grid, rng, 1.0, 2, true);
    r = sup_inf_scan(h);
    double sup = h[0].real(), inf = h[0].real();
    std::size_t am = 0, an = 0;
    for (std::size_t p = 0; p < h.size(); ++p) {
        if (h[p].real() > sup) { sup = h[p].real(); am = p; }
        if (h[p].real() < inf) { inf = h[p].real(); an = p; }
    }
    CHECK(r.sup == sup);
    CHECK(r.inf == inf);
    CHECK(r.argmax == am);
    CHECK(r.argmin == an);
}

TEST_CASE("fft round trip") {
    GridSpec grid(1, 16);
    SpectralEngine eng(grid);
    std::mt19937_64 rng(23);
    Field f = oracles::random_mode_field(grid, rng, 1.0, 5, false);
    Field g = eng.ifft(eng.fft(f));
    double worst = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) worst = std::max(worst, std::abs(f[p] - g[p]));
    CHECK(worst < 1e-13);
}
