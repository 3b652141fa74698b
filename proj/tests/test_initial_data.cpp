#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pcflab/geometry.hpp"
#include "pcflab/initial_data.hpp"
#include "support/oracles.hpp"

using namespace pcflab;

TEST_CASE("zero potential gives the flat metric with no torsion") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    PotentialForm alpha(grid);
    InitialData init = make_pluriclosed_initial(eng, alpha);
    MetricField flat(grid, /*flat=*/true);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (std::size_t p = 0; p < grid.total(); ++p)
                worst = std::max(worst,
                                 std::abs(init.omega0.comp(i, j)[p] - flat.comp(i, j)[p]));
    CHECK(worst == 0.0);
    GeometryData geo = analyze_geometry(eng, init.omega0, GeometryOptions{});
    CHECK(geo.torsion.sup_abs() < 1e-13);
    CHECK(init.eta.sup_abs() < 1e-13);
}

TEST_CASE("standard mode: pluriclosed, positive, non-Kahler") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    PotentialForm alpha(grid);
    alpha.add_mode({0, {0, 0, 1, 0}, cplx(0.05, 0.0)});
    InitialData init = make_pluriclosed_initial(eng, alpha);

    CHECK(pluriclosed_residual(eng, init.omega0) < 1e-10);
    MetricPointwise mp = analyze_metric(init.omega0);
    CHECK(mp.min_eig > 0.5);
    GeometryData geo = analyze_geometry(eng, init.omega0, GeometryOptions{});
    CHECK(geo.torsion.sup_abs() > 1e-2);

    // d omega0 = dbar eta for the returned eta = -d alpha0:
    // i T_{ij kbar} = d_kbar eta_{ij} pointwise
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Field spec = eng.fft(init.eta.at({i, j}));
            for (int k = 0; k < 2; ++k) {
                Field s = spec;
                eng.apply_derivative(s, k, true);
                Field de = eng.ifft(s);
                const Field& T = geo.torsion.at({i, j, k});
                for (std::size_t p = 0; p < de.size(); ++p)
                    worst = std::max(worst, std::abs(cplx(0, 1) * T[p] - de[p]));
            }
        }
    CHECK(worst < 1e-10);
}

TEST_CASE("pluriclosed initials stay pluriclosed at tighter resolution (n=2, N=16)") {
    GridSpec grid(2, 16);
    SpectralEngine eng(grid);
    std::mt19937_64 rng(7);
    InitialData init = random_pluriclosed_metric(eng, rng, 0.05);
    CHECK(pluriclosed_residual(eng, init.omega0) < 1e-8);
}

TEST_CASE("positivity violation is rejected with the measured eigenvalue") {
    GridSpec grid(2, 12);
    SpectralEngine eng(grid);
    PotentialForm alpha(grid);
    alpha.add_mode({0, {0, 0, 1, 0}, cplx(0.4, 0.0)}); // far too large
    try {
        make_pluriclosed_initial(eng, alpha);
        FAIL("expected positivity rejection");
    } catch (const DegenerateMetricError& e) {
        CHECK(e.min_eig < 0.5);
    }
}

TEST_CASE("holomorphic frame sections") {
    GridSpec grid(2, 8);
    SpectralEngine eng(grid);

    SUBCASE("n=2, p=1 covariant: {dz1, dz2}, evaluation map has full rank") {
        auto secs = holomorphic_frame_sections(grid, Variance::Co, 1);
        REQUIRE(secs.size() == 2);
        // evaluation matrix at every point is the identity
        for (std::size_t p = 0; p < grid.total(); p += 37) {
            for (std::size_t s = 0; s < secs.size(); ++s)
                for (std::size_t c = 0; c < secs[s].comp_count(); ++c)
                    CHECK(secs[s].comp(c)[p] == (s == c ? cplx(1, 0) : cplx(0, 0)));
        }
    }

    SUBCASE("p=2 gives all n^p tensor products with full rank") {
        auto secs = holomorphic_frame_sections(grid, Variance::Contra, 2);
        CHECK(secs.size() == 4);
        for (std::size_t s = 0; s < secs.size(); ++s)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(secs[s].comp(c)[0] == (s == c ? cplx(1, 0) : cplx(0, 0)));
    }

    SUBCASE("|dz^1|^2 = g^{1bar 1} pointwise on a random metric") {
        std::mt19937_64 rng(17);
        MetricField g = oracles::random_hermitian_metric(grid, rng, 0.05);
        MetricPointwise mp = analyze_metric(g);
        auto secs = holomorphic_frame_sections(grid, Variance::Co, 1);
        Field n2 = tensor_norm_sq(secs[0], g, mp);
        double worst = 0.0;
        for (std::size_t p = 0; p < n2.size(); ++p)
            worst = std::max(worst, std::abs(n2[p] - mp.gi(0, 0)[p]));
        CHECK(worst < 1e-14);
    }

    SUBCASE("dbar of each section vanishes to machine precision") {
        auto secs = holomorphic_frame_sections(grid, Variance::Co, 2);
        for (const TensorField& s : secs)
            for (std::size_t c = 0; c < s.comp_count(); ++c)
                for (int j = 0; j < grid.n; ++j)
                    CHECK(sup_abs(eng.derivative(s.comp(c), j, true)) < 1e-13);
    }

    SUBCASE("p must be positive") {
        CHECK_THROWS_AS(holomorphic_frame_sections(grid, Variance::Co, 0), Error);
    }
}

TEST_CASE("conjugation flips bars and conjugates values") {
    GridSpec grid(2, 8);
    TensorField x(grid, {co_slot(), contra_bar_slot()});
    for (auto& v : x.at({0, 1})) v = cplx(1.5, -2.0);
    TensorField xc = x.conjugated();
    CHECK(xc.sig()[0].barred == true);
    CHECK(xc.sig()[1].barred == false);
    CHECK(xc.sig()[0].var == Variance::Co);
    CHECK(xc.at({0, 1})[0] == cplx(1.5, 2.0));
}

TEST_CASE("n=1 degenerate sanity: every metric has zero torsion") {
    GridSpec grid(1, 12);
    SpectralEngine eng(grid);
    std::mt19937_64 rng(23);
    MetricField g = oracles::random_hermitian_metric(grid, rng, 0.05, 2);
    GeometryData geo = analyze_geometry(eng, g, GeometryOptions{});
    CHECK(geo.torsion.sup_abs() == 0.0);
    CHECK(sup_metric_abs(geo.Q) < 1e-15);
}
