#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "calderon/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Partial-data Calderon toolkit: forward solves, CGO solutions, Carleman sweeps, reconstruction"};
    app.require_subcommand(1, 1);

    std::string config, out = "out";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    for (const std::string& name : calderon::pipeline_commands()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " pipeline");
        sub->add_option("--config", config, "scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (CALDERON_OUT overrides)");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    if (const char* env = std::getenv("CALDERON_OUT"); env && *env) out = env;

    try {
        calderon::Scenario scenario = calderon::load_scenario(config);
        if (seed) {
            nlohmann::json c = scenario.config;
            c["seed"] = *seed;
            scenario = calderon::parse_scenario(c);
        }
        const calderon::Report report = calderon::run_scenario(scenario, command, jobs);
        calderon::emit_report(report, out);
        std::cout << report.table();
    } catch (const calderon::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
