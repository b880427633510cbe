#include "afem/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "afem/config.hpp"
#include "afem/driver.hpp"
#include "afem/error.hpp"
#include "afem/parallel.hpp"
#include "afem/version.hpp"

namespace afem {

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 1;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file {}", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void log_defaults(const std::string& path) {
    for (const auto& d : defaults_used(read_file(path))) {
        spdlog::debug("default {} = {} ({})", d.key, d.value, d.origin);
    }
}

} // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Adaptive phase-field fracture simulator", "fracture-afem"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool verbose = false;

    auto* run_cmd = app.add_subcommand("run", "run a simulation");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--output", output_dir, "output directory (overrides the file)");
    run_cmd->add_option("--steps", steps, "number of time steps (overrides the file)");
    run_cmd->add_option("--seed", seed, "seed recorded with the run");
    run_cmd->add_option("--threads", threads, "worker threads");
    run_cmd->add_flag("-v,--verbose", verbose, "debug logging");

    auto* check_cmd = app.add_subcommand("check-config", "validate a config file and print it resolved");
    check_cmd->add_option("--config", config_path, "config file")->required();

    auto* version_cmd = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kConfigError;
    }

    if (*version_cmd) {
        std::cout << kVersion << "\n";
        return 0;
    }

    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (output_dir) cfg.output_dir = *output_dir;
        if (steps) cfg.steps = *steps;
        if (seed) cfg.seed = *seed;
        cfg.validate();
        if (*run_cmd) log_defaults(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    if (*check_cmd) {
        std::cout << write_config(cfg);
        return 0;
    }

    if (threads) set_worker_count(*threads);
    try {
        const RunArtifacts art = run(cfg);
        spdlog::info("wrote {} and {} snapshots; {} cells, {} dofs in {:.1f} s", art.energy_csv.string(),
                     art.snapshots.size(), art.summary.final_cells, art.summary.final_dofs,
                     art.summary.wall_seconds);
        return 0;
    } catch (const RunError& e) {
        spdlog::error("run failed at step {} ({}): {}", e.step, e.phase, e.what());
        return kRuntimeError;
    } catch (const std::exception& e) {
        spdlog::error("run failed: {}", e.what());
        return kRuntimeError;
    }
}

} // namespace afem
