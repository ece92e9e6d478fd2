#include <cstdint>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "nudgesim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nudgesim: synthetic mobile-health engagement simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string run_dir;
    std::string what;
    std::string export_out;
    std::uint64_t seed = 0;
    bool quiet = false;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    auto* run = app.add_subcommand("run", "simulate a full experiment and write outputs");
    run->add_option("--config", config_path, "config JSON path")->required();
    run->add_option("--out", out_dir, "output directory (must not exist)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_flag("--quiet", quiet, "suppress the summary line");
    run->add_option("--workers", workers, "simulation worker threads");

    auto* exp = app.add_subcommand("export", "derive a CSV from a finished run");
    exp->add_option("--run", run_dir, "run output directory")->required();
    exp->add_option("--what", what,
                    "activity_curve | regret_curve | decay_shapes | metrics")
        ->required();
    exp->add_option("--out", export_out, "CSV path (default <run>/<what>.csv)");

    auto* inspect = app.add_subcommand("inspect", "print a config and population summary");
    inspect->add_option("--config", config_path, "config JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        std::optional<std::uint64_t> seed_override;
        if (seed_opt->count() > 0) seed_override = seed;
        return nudgesim::cli::cmd_run(config_path, out_dir, seed_override, quiet, workers);
    }
    if (exp->parsed()) {
        return nudgesim::cli::cmd_export(run_dir, what, export_out);
    }
    return nudgesim::cli::cmd_inspect(config_path);
}
