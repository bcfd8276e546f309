#include "ulamsteer/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Ulam-Galerkin measure steering: discretize, solve the transport LP, extract feedback."};
    app.require_subcommand(1, 1);

    std::string config;
    ulamsteer::RunOptions opt;
    std::string out_dir;
    std::uint64_t seed = 0;
    double tol = 0.0;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"discretize", "Build the transition tensor, cost table and projected measures"},
        {"check-reachability", "Check the exact-horizon reachability condition"},
        {"solve", "Solve the transport LP"},
        {"simulate", "Solve, extract the feedback law and propagate the closed-loop chain"},
        {"rollout", "Simulate, then roll out agents on the original system"},
        {"run", "Full pipeline"},
        {"export-lp", "Write the transport LP in MPS format"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Run-config JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (overrides the config)");
        sub->add_option("--seed", seed, "Random seed (overrides the config)");
        sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--tol", tol, "Relative LP optimality tolerance")->check(CLI::PositiveNumber);
        sub->add_flag("-v,--verbose", opt.verbose, "Solver progress and timings on stderr");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ulamsteer::kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--out")) opt.out_dir = out_dir;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--tol")) opt.tol = tol;
    return ulamsteer::execute(sub->get_name(), config, opt);
}
