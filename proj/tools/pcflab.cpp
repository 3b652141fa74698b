#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "pcflab/pcflab.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pcflab: pluriclosed-flow laboratory on complex tori and Lie algebras"};
    app.require_subcommand(1);

    std::string cfg_path, out_dir;
    std::int64_t seed = -1;
    bool quiet = false;
    app.add_option("--out", out_dir, "override the output directory");
    app.add_option("--seed", seed, "override the config seed");
    app.add_flag("--quiet", quiet, "suppress progress output");

    CLI::App* flow = app.add_subcommand("flow", "PDE flow on the torus");
    flow->fallthrough();
    CLI::App* flow_run = flow->add_subcommand("run", "integrate a flow experiment");
    flow_run->add_option("config", cfg_path, "experiment config file")->required();
    CLI::App* flow_check =
        flow->add_subcommand("check-identities", "run the evolution-identity suite");
    flow_check->add_option("config", cfg_path, "experiment config file")->required();

    CLI::App* homog = app.add_subcommand("homog", "invariant metrics on Lie algebras");
    homog->fallthrough();
    CLI::App* homog_run = homog->add_subcommand("run", "invariant-metric ODE flow");
    homog_run->add_option("config", cfg_path, "experiment config file")->required();
    CLI::App* homog_scan = homog->add_subcommand("skt-scan", "SKT-residual minimization");
    homog_scan->add_option("config", cfg_path, "experiment config file")->required();
    for (CLI::App* leaf : {flow_run, flow_check, homog_run, homog_scan}) leaf->fallthrough();

    CLI11_PARSE(app, argc, argv);

    pcflab::RunnerOverrides ov;
    ov.out_dir = out_dir;
    ov.seed = seed;
    ov.quiet = quiet;

    try {
        pcflab::ExperimentConfig cfg = pcflab::parse_config(cfg_path);
        if (flow_run->parsed()) return pcflab::cmd_flow_run(cfg, ov);
        if (flow_check->parsed()) return pcflab::cmd_check_identities(cfg, ov);
        if (homog_run->parsed()) return pcflab::cmd_homog_run(cfg, ov);
        if (homog_scan->parsed()) return pcflab::cmd_homog_scan(cfg, ov);
    } catch (const pcflab::ConfigError& e) {
        std::cerr << "config error";
        if (e.line > 0) std::cerr << " (line " << e.line << ")";
        std::cerr << ": " << e.what() << "\n";
        return pcflab::kExitConfigError;
    } catch (const pcflab::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return pcflab::kExitConfigError;
    } catch (const pcflab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pcflab::kExitConfigError;
    }
    return pcflab::kExitConfigError;
}
