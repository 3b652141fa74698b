#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "pcflab/geometry.hpp"
#include "pcflab/homogeneous.hpp"
#include "pcflab/spectral.hpp"
#include "support/oracles.hpp"

using namespace pcflab;

namespace {

std::string catalog(const std::string& name) { return "data/algebras/" + name + ".alg"; }

Eigen::MatrixXcd random_metric(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 0.5);
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        L(i, i) = std::exp(gauss(rng));
        for (int j = 0; j < i; ++j) L(i, j) = cplx(gauss(rng), gauss(rng));
    }
    return L * L.adjoint();
}

std::string write_temp(const std::string& body) {
    std::string path = "/tmp/pcflab_test_algebra.alg";
    std::ofstream out(path);
    out << body;
    return path;
}

} // namespace

TEST_CASE("catalog loads and validates all shipped algebras") {
    for (const char* name : {"abelian_r4", "sl2c", "nil6_skt", "kt4"}) {
        LieAlgebraSpec spec = parse_algebra_file(catalog(name));
        CHECK(spec.name == name);
        CHECK(spec.jacobi_residual() < 1e-12);
        CHECK(spec.nijenhuis_residual() < 1e-12);
        ComplexFrame frame = build_frame(spec);
        CHECK(frame.n == spec.dim / 2);
    }
}

TEST_CASE("malformed catalog entries are rejected") {
    SUBCASE("Jacobi violation") {
        std::string path = write_temp(
            "format 1\nname bad\ndim 6\n"
            "c 1 2 3 1\nc 1 3 4 1\nc 2 3 5 1\nc 1 4 6 1\nc 4 5 6 1\n"
            "J 2 1 1\nJ 1 2 -1\nJ 4 3 1\nJ 3 4 -1\nJ 6 5 1\nJ 5 6 -1\n");
        CHECK_THROWS_AS(parse_algebra_file(path), Error);
    }
    SUBCASE("non-integrable J") {
        // Heisenberg x R with a J that swaps the center into the non-closed
        // directions is not integrable
        std::string path = write_temp(
            "format 1\nname bad2\ndim 4\n"
            "c 1 3 2 1\n"
            "J 2 1 1\nJ 1 2 -1\nJ 4 3 1\nJ 3 4 -1\n");
        CHECK_THROWS_AS(parse_algebra_file(path), Error);
    }
    SUBCASE("syntax errors carry line numbers") {
        std::string path = write_temp("format 1\nname x\ndim 4\nc 1 2\n");
        try {
            parse_algebra_file(path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line == 4);
        }
    }
    SUBCASE("unknown directives rejected") {
        std::string path = write_temp("format 1\nname x\ndim 4\nbogus 1 2 3\n");
        CHECK_THROWS_AS(parse_algebra_file(path), ConfigError);
    }
}

TEST_CASE("abelian algebra: everything vanishes and the flow is stationary") {
    LieAlgebraSpec spec = parse_algebra_file(catalog("abelian_r4"));
    ComplexFrame frame = build_frame(spec);
    std::mt19937_64 rng(5);
    Eigen::MatrixXcd g0 = random_metric(frame.n, rng);
    InvariantGeometry geo = invariant_geometry(frame, g0);
    CHECK(geo.S.cwiseAbs().maxCoeff() == 0.0);
    CHECK(geo.Q.cwiseAbs().maxCoeff() == 0.0);
    CHECK(geo.rho.cwiseAbs().maxCoeff() == 0.0);
    CHECK(geo.T_norm_sq == 0.0);

    OdeConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_max = 0.5;
    OdeResult res = ode_flow(frame, g0, cfg);
    CHECK(!res.degenerate);
    CHECK((res.trajectory.back().g - g0).cwiseAbs().maxCoeff() < 1e-14);

    // exact fixed point of the right side
    CHECK(invariant_pcf_rhs(frame, g0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("abelian constants embedded as a constant torus field match geometry-core") {
    LieAlgebraSpec spec = parse_algebra_file(catalog("abelian_r4"));
    ComplexFrame frame = build_frame(spec);
    std::mt19937_64 rng(7);
    Eigen::MatrixXcd g0 = random_metric(frame.n, rng);

    GridSpec grid(2, 8);
    SpectralEngine eng(grid);
    MetricField g(grid);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (auto& v : g.comp(i, j)) v = g0(i, j);
    GeometryData geo = analyze_geometry(eng, g, GeometryOptions{});
    InvariantGeometry inv = invariant_geometry(frame, g0);
    CHECK(geo.torsion.sup_abs() < 1e-12);
    CHECK(sup_metric_abs(geo.S) < 1e-11);
    CHECK(sup_metric_abs(geo.Q) < 1e-12);
    CHECK(inv.T_norm_sq == 0.0);
    CHECK(inv.S.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sl(2,C): frozen values from the hand-expanded bracket contraction") {
    LieAlgebraSpec spec = parse_algebra_file(catalog("sl2c"));
    ComplexFrame frame = build_frame(spec);
    const int n = frame.n;
    REQUIRE(n == 3);

    // complex-parallelizable: no mixed brackets, so the connection is flat
    double dmax = 0.0;
    for (const cplx& v : frame.D) dmax = std::max(dmax, std::abs(v));
    CHECK(dmax == 0.0);

    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    InvariantGeometry geo = invariant_geometry(frame, id);
    CHECK(geo.S.cwiseAbs().maxCoeff() == 0.0);
    CHECK(geo.rho.cwiseAbs().maxCoeff() == 0.0);

    // independent expansion oracle: Q(id)_{a bbar} = sum_{k,n} C^n_ak conj(C^n_bk)
    // evaluates to diag(8, 5, 5); |T|^2 = tr Q = 18
    Eigen::MatrixXcd expectQ = Eigen::MatrixXcd::Zero(3, 3);
    expectQ(0, 0) = 8.0;
    expectQ(1, 1) = 5.0;
    expectQ(2, 2) = 5.0;
    CHECK((geo.Q - expectQ).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(geo.T_norm_sq == doctest::Approx(18.0).epsilon(1e-12));

    // T^c_ab = -C^c_ab at the identity metric
    double tworst = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int e = 0; e < n; ++e)
                tworst = std::max(tworst, std::abs(geo.Tl(a, b, e, n) + frame.Cc(e, a, b)));
    CHECK(tworst < 1e-13);
}

TEST_CASE("rho is the same for every invariant metric (first Chern representative)") {
    for (const char* name : {"nil6_skt", "kt4", "sl2c"}) {
        LieAlgebraSpec spec = parse_algebra_file(catalog(name));
        ComplexFrame frame = build_frame(spec);
        std::mt19937_64 rng(11);
        Eigen::MatrixXcd rho0 = invariant_geometry(frame, random_metric(frame.n, rng)).rho;
        for (int k = 0; k < 4; ++k) {
            Eigen::MatrixXcd rho = invariant_geometry(frame, random_metric(frame.n, rng)).rho;
            CHECK((rho - rho0).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("invariant Q is positive semidefinite (bar placement lock)") {
    for (const char* name : {"sl2c", "nil6_skt", "kt4"}) {
        LieAlgebraSpec spec = parse_algebra_file(catalog(name));
        ComplexFrame frame = build_frame(spec);
        std::mt19937_64 rng(13);
        for (int k = 0; k < 5; ++k) {
            Eigen::MatrixXcd g = random_metric(frame.n, rng);
            InvariantGeometry geo = invariant_geometry(frame, g);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(geo.Q,
                                                               Eigen::EigenvaluesOnly);
            CHECK(es.eigenvalues().minCoeff() > -1e-12);
        }
    }
}

TEST_CASE("det evolution identity holds along invariant flows") {
    // d/dt log det g = |T|^2 - tr_g rho(g0), the Laplacian being absent for
    // invariant data; both sides computed independently along the run
    for (const char* name : {"sl2c", "nil6_skt"}) {
        LieAlgebraSpec spec = parse_algebra_file(catalog(name));
        ComplexFrame frame = build_frame(spec);
        Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Identity(frame.n, frame.n);
        Eigen::MatrixXcd rho0 = invariant_geometry(frame, g0).rho;
        OdeConfig cfg;
        cfg.dt = 1e-4;
        cfg.t_max = 0.02;
        OdeResult res = ode_flow(frame, g0, cfg);
        REQUIRE(!res.degenerate);
        REQUIRE(res.trajectory.size() > 5);
        double worst = 0.0;
        for (std::size_t k = 1; k + 1 < res.trajectory.size(); ++k) {
            const OdeSample& a = res.trajectory[k - 1];
            const OdeSample& b = res.trajectory[k];
            const OdeSample& c = res.trajectory[k + 1];
            double lhs = (std::log(c.det) - std::log(a.det)) / (c.t - a.t);
            Eigen::MatrixXcd gi = b.g.inverse();
            double rhs = b.T_norm_sq - (gi * rho0).trace().real();
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        CHECK(worst < 1e-5); // second-order in the sample spacing
    }
}

TEST_CASE("sl(2,C) invariant flow: determinant grows, behavior recorded") {
    LieAlgebraSpec spec = parse_algebra_file(catalog("sl2c"));
    ComplexFrame frame = build_frame(spec);
    Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Identity(3, 3);
    OdeConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 0.2;
    OdeResult res = ode_flow(frame, g0, cfg);
    REQUIRE(!res.degenerate);
    // rhs = Q >= 0: metric grows, no convergence claim
    CHECK(res.trajectory.back().det > 1.5);
    CHECK(res.trajectory.back().min_eig > 1.0);
}

TEST_CASE("skt residual: scale covariance and the abelian zero") {
    LieAlgebraSpec spec = parse_algebra_file(catalog("nil6_skt"));
    ComplexFrame frame = build_frame(spec);
    std::vector<cplx> B = detail::complexified_bracket(frame);
    std::mt19937_64 rng(17);
    Eigen::MatrixXcd g = random_metric(frame.n, rng);
    double r1 = skt_residual(frame, g, B);
    double r2 = skt_residual(frame, (2.5 * g).eval(), B);
    CHECK(r2 == doctest::Approx(2.5 * 2.5 * r1).epsilon(1e-12));

    LieAlgebraSpec ab = parse_algebra_file(catalog("abelian_r4"));
    ComplexFrame fab = build_frame(ab);
    std::vector<cplx> Bab = detail::complexified_bracket(fab);
    for (int k = 0; k < 5; ++k)
        CHECK(skt_residual(fab, random_metric(fab.n, rng), Bab) == 0.0);
}

TEST_CASE("nil6_skt: the diagonal metric is SKT (hand-derived control)") {
    LieAlgebraSpec spec = parse_algebra_file(catalog("nil6_skt"));
    ComplexFrame frame = build_frame(spec);
    std::vector<cplx> B = detail::complexified_bracket(frame);
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(3, 3);
    CHECK(skt_residual(frame, id, B) < 1e-24);
    // and it is genuinely non-Kahler: torsion present
    CHECK(invariant_geometry(frame, id).T_norm_sq > 0.1);
}

TEST_CASE("scanner finds SKT metrics where they exist and a positive floor on sl2c") {
    ScanConfig cfg;
    cfg.starts = 24; // the acceptance suite runs the full 100
    std::mt19937_64 dummy;

    SUBCASE("abelian: zero at every start") {
        ComplexFrame f = build_frame(parse_algebra_file(catalog("abelian_r4")));
        ScanResultHomog res = skt_residual_scan(f, cfg, 42);
        CHECK(res.min_residual == 0.0);
    }
    SUBCASE("nil6_skt: finds the SKT class") {
        ComplexFrame f = build_frame(parse_algebra_file(catalog("nil6_skt")));
        ScanResultHomog res = skt_residual_scan(f, cfg, 42);
        CHECK(res.min_residual < 1e-8);
        std::vector<cplx> B = detail::complexified_bracket(f);
        CHECK(skt_residual(f, res.witness, B) < 1e-8);
        CHECK(std::abs(res.witness.determinant().real() - 1.0) < 1e-8);
    }
    SUBCASE("kt4: finds the SKT class") {
        ComplexFrame f = build_frame(parse_algebra_file(catalog("kt4")));
        ScanResultHomog res = skt_residual_scan(f, cfg, 42);
        CHECK(res.min_residual < 1e-8);
    }
    SUBCASE("sl2c: bounded away from zero across all starts") {
        ComplexFrame f = build_frame(parse_algebra_file(catalog("sl2c")));
        ScanResultHomog res = skt_residual_scan(f, cfg, 42);
        CHECK(res.min_residual > 1e-3);
        for (double v : res.per_start) CHECK(v > 1e-3);
    }
}
