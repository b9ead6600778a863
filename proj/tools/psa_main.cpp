#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "psa/acceptance.hpp"
#include "psa/config.hpp"
#include "psa/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Distribution-perturbation reliability sensitivity analysis"};
    app.require_subcommand(1);
    app.fallthrough();

    unsigned threads = 1;
    app.add_option("--threads", threads, "worker threads for sweep cells (0 = auto)")
        ->capture_default_str();

    std::string config_path;
    std::string output_override;
    CLI::App* run_cmd = app.add_subcommand("run", "run a sweep from a config file");
    run_cmd->add_option("--config", config_path, "path to the JSON run configuration")
        ->required();
    CLI::Option* out_opt =
        run_cmd->add_option("--output", output_override, "override the output table path");

    bool fast = false;
    CLI::App* verify_cmd = app.add_subcommand("verify", "run the built-in verification suite");
    verify_cmd->add_flag("--fast", fast, "scale Monte Carlo sizes down 10x");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        psa::RunConfig cfg;
        try {
            cfg = psa::load_config(config_path);
        } catch (const psa::io_error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 4;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
        std::optional<std::string> override_path;
        if (*out_opt) override_path = output_override;
        return psa::run(cfg, threads, override_path);
    }

    psa::AcceptanceOptions opts;
    opts.fast = fast;
    opts.threads = threads;
    return psa::run_acceptance(opts, std::cout);
}
