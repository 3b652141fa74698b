#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcflab/pcflab.hpp"
#include "support/oracles.hpp"

using namespace pcflab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_temp_cfg(const std::string& body) {
    std::string path = "/tmp/pcflab_test_config.cfg";
    std::ofstream out(path);
    out << body;
    return path;
}

} // namespace

TEST_CASE("fnv1a64 against the reference constants") {
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
    const char a = 'a';
    CHECK(fnv1a64(&a, 1) == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("snapshot round trip preserves every byte of the state") {
    GridSpec grid(2, 8);
    SpectralEngine eng(grid);
    std::mt19937_64 rng(3);
    InitialData init = random_pluriclosed_metric(eng, rng, 0.04);
    FlowState s = FlowState::from_initial(eng, init);
    s.t = 0.375;
    // give alpha some content
    for (auto& v : s.alpha.at({0})) v = cplx(0.01, -0.02);

    std::string path = "/tmp/pcflab_test.snapshot";
    write_snapshot(path, s);
    Snapshot snap = read_snapshot(path);
    CHECK(snap.n == 2);
    CHECK(snap.N == 8);
    CHECK(snap.t == 0.375);
    FlowState r = state_from_snapshot(snap);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (std::size_t p = 0; p < grid.total(); ++p) {
                CHECK(r.g.comp(i, j)[p] == s.g.comp(i, j)[p]);
                CHECK(r.omega0.comp(i, j)[p] == s.omega0.comp(i, j)[p]);
            }
    for (std::size_t c = 0; c < s.alpha.comp_count(); ++c)
        for (std::size_t p = 0; p < grid.total(); ++p)
            CHECK(r.alpha.comp(c)[p] == s.alpha.comp(c)[p]);
    CHECK(r.eta.sig() == s.eta.sig());

    SUBCASE("corrupted magic is rejected") {
        std::ofstream out(path, std::ios::binary);
        out << "NOTASNAP garbage";
        out.close();
        CHECK_THROWS_AS(read_snapshot(path), IoError);
    }
}

TEST_CASE("config parsing") {
    SUBCASE("a full torus config") {
        std::string path = write_temp_cfg(
            "# comment\n"
            "domain.type = torus\n"
            "domain.n = 2\n"
            "domain.N = 12\n"
            "initial.type = alpha_modes\n"
            "initial.mode = dz1 (0,0,1,0) 0.05 0.0\n"
            "initial.mode = dz2 (1,0,0,0) 0.0 0.01\n"
            "integrator.dt0 = auto\n"
            "integrator.t_max = 2.5\n"
            "integrator.stop_tol = 1e-6\n"
            "integrator.adaptive = true\n"
            "monitors.cadence = 4\n"
            "monitors.suites = max_principle,identities\n"
            "output.dir = /tmp/pcflab_out\n"
            "output.formats = csv,json\n"
            "seed = 99\n");
        ExperimentConfig cfg = parse_config(path);
        CHECK(cfg.domain == DomainType::Torus);
        CHECK(cfg.N == 12);
        REQUIRE(cfg.modes.size() == 2);
        CHECK(cfg.modes[0].comp == 0);
        CHECK(cfg.modes[1].comp == 1);
        CHECK(cfg.modes[0].freq == std::vector<int>{0, 0, 1, 0});
        CHECK(cfg.modes[0].amp == cplx(0.05, 0.0));
        CHECK(cfg.dt0 == 0.0);
        CHECK(cfg.t_max == 2.5);
        CHECK(cfg.cadence == 4);
        CHECK(cfg.suite_identities);
        CHECK(!cfg.write_snapshot_file);
        CHECK(cfg.seed == 99);
    }

    SUBCASE("unknown keys are rejected with the line number") {
        std::string path = write_temp_cfg("domain.type = torus\nbogus.key = 1\n");
        try {
            parse_config(path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line == 2);
        }
    }

    SUBCASE("duplicate keys are rejected") {
        std::string path = write_temp_cfg("domain.n = 2\ndomain.n = 3\n");
        CHECK_THROWS_AS(parse_config(path), ConfigError);
    }

    SUBCASE("malformed values carry diagnostics") {
        CHECK_THROWS_AS(parse_config(write_temp_cfg("domain.n = two\n")), ConfigError);
        CHECK_THROWS_AS(parse_config(write_temp_cfg("integrator.adaptive = maybe\n")),
                        ConfigError);
        CHECK_THROWS_AS(parse_config(write_temp_cfg("initial.mode = dz1 1 0\n")), ConfigError);
        CHECK_THROWS_AS(parse_config(write_temp_cfg("monitors.suites = bogus\n")), ConfigError);
    }

    SUBCASE("cross-field validation") {
        CHECK_THROWS_AS(parse_config(write_temp_cfg("domain.type = algebra\n")), ConfigError);
        CHECK_THROWS_AS(
            parse_config(write_temp_cfg("initial.type = alpha_modes\n")), ConfigError);
        // frequency arity must match 2n
        CHECK_THROWS_AS(parse_config(write_temp_cfg(
                            "domain.n = 2\ninitial.type = alpha_modes\n"
                            "initial.mode = dz1 (1,0) 0.1 0\n")),
                        ConfigError);
    }

    SUBCASE("bundled configs all parse") {
        for (const char* f :
             {"configs/flat.cfg", "configs/torus_nonkahler_small.cfg",
              "configs/negative_control_bigdt.cfg", "configs/identities_short.cfg",
              "configs/homog_abelian_run.cfg", "configs/homog_abelian_scan.cfg",
              "configs/homog_sl2c_scan.cfg", "configs/homog_nil6_skt_scan.cfg",
              "configs/homog_sl2c_run.cfg"})
            CHECK_NOTHROW(parse_config(f));
    }
}

TEST_CASE("flow run end to end: artifacts, manifest, determinism, restart") {
    std::string cfg_path = write_temp_cfg(
        "domain.type = torus\n"
        "domain.n = 2\n"
        "domain.N = 8\n"
        "initial.type = alpha_modes\n"
        "initial.mode = dz1 (0,0,1,0) 0.04 0.0\n"
        "integrator.t_max = 0.05\n"
        "integrator.stop_tol = 0\n"
        "monitors.cadence = 5\n"
        "output.dir = /tmp/pcflab_run_a\n"
        "seed = 5\n");
    ExperimentConfig cfg = parse_config(cfg_path);
    RunnerOverrides ov;
    ov.quiet = true;
    std::filesystem::remove_all("/tmp/pcflab_run_a");
    int code = cmd_flow_run(cfg, ov);
    CHECK(code == kExitOk);
    CHECK(std::filesystem::exists("/tmp/pcflab_run_a/summary.json"));
    CHECK(std::filesystem::exists("/tmp/pcflab_run_a/trajectory.csv"));
    CHECK(std::filesystem::exists("/tmp/pcflab_run_a/final.snapshot"));
    CHECK(std::filesystem::exists("/tmp/pcflab_run_a/series/sup_T2.csv"));

    auto j = nlohmann::json::parse(slurp("/tmp/pcflab_run_a/summary.json"));
    CHECK(j["run"]["stop_reason"] == "t_max");
    CHECK(j["exit_code"] == 0);
    CHECK(j["existence"]["tau_star"] == "infinite");
    // manifest hashes match the emitted files
    for (const auto& e : j["files"]) {
        std::string rel = e["path"];
        CHECK(hash_file("/tmp/pcflab_run_a/" + rel) == e["fnv1a64"]);
    }

    SUBCASE("bit-identical summary for the same config and seed") {
        RunnerOverrides ov_b;
        ov_b.quiet = true;
        ov_b.out_dir = "/tmp/pcflab_run_b";
        std::filesystem::remove_all("/tmp/pcflab_run_b");
        CHECK(cmd_flow_run(cfg, ov_b) == kExitOk);
        CHECK(slurp("/tmp/pcflab_run_b/summary.json") == slurp("/tmp/pcflab_run_a/summary.json"));
        CHECK(slurp("/tmp/pcflab_run_b/trajectory.csv") ==
              slurp("/tmp/pcflab_run_a/trajectory.csv"));
    }

    SUBCASE("restart from the final snapshot continues the trajectory") {
        std::string cfg2_path = write_temp_cfg(
            "domain.type = torus\n"
            "domain.n = 2\n"
            "domain.N = 8\n"
            "initial.type = snapshot\n"
            "initial.snapshot = /tmp/pcflab_run_a/final.snapshot\n"
            "integrator.t_max = 0.08\n"
            "integrator.stop_tol = 0\n"
            "monitors.cadence = 5\n"
            "output.dir = /tmp/pcflab_run_c\n"
            "seed = 5\n");
        ExperimentConfig cfg2 = parse_config(cfg2_path);
        std::filesystem::remove_all("/tmp/pcflab_run_c");
        CHECK(cmd_flow_run(cfg2, ov) == kExitOk);
        auto j2 = nlohmann::json::parse(slurp("/tmp/pcflab_run_c/summary.json"));
        CHECK(double(j2["run"]["t_final"]) >= 0.08 - 1e-9);
        Snapshot snap = read_snapshot("/tmp/pcflab_run_c/final.snapshot");
        CHECK(snap.t >= 0.08 - 1e-9);
    }
}

TEST_CASE("homog commands end to end") {
    RunnerOverrides ov;
    ov.quiet = true;

    SUBCASE("skt-scan on the abelian algebra reports zero") {
        ExperimentConfig cfg = parse_config("configs/homog_abelian_scan.cfg");
        cfg.scan.starts = 10;
        ov.out_dir = "/tmp/pcflab_scan_ab";
        std::filesystem::remove_all(ov.out_dir);
        CHECK(cmd_homog_scan(cfg, ov) == kExitOk);
        auto j = nlohmann::json::parse(slurp("/tmp/pcflab_scan_ab/summary.json"));
        CHECK(double(j["min_residual"]) == 0.0);
    }

    SUBCASE("run on the abelian algebra is stationary, exit 0") {
        ExperimentConfig cfg = parse_config("configs/homog_abelian_run.cfg");
        ov.out_dir = "/tmp/pcflab_run_ab";
        std::filesystem::remove_all(ov.out_dir);
        CHECK(cmd_homog_run(cfg, ov) == kExitOk);
        auto j = nlohmann::json::parse(slurp("/tmp/pcflab_run_ab/summary.json"));
        CHECK(double(j["final"]["T_norm_sq"]) == 0.0);
        CHECK(double(j["logdet_identity_residual"]) < 1e-12);
        CHECK(j["existence"]["tau_star"] == "not_computed");
    }
}

TEST_CASE("csv writer formats rows at full precision") {
    std::string path = "/tmp/pcflab_test.csv";
    {
        CsvWriter csv(path, {"a", "b"});
        csv.row({1.0 / 3.0, 2e-18});
    }
    std::string body = slurp(path);
    CHECK(body.find("a,b\n") == 0);
    CHECK(body.find("0.33333333333333331") != std::string::npos);
}
