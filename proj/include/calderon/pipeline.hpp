#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "calderon/scenario.hpp"

namespace calderon {

struct Check {
    std::string id;
    std::string stage;
    std::optional<int> criterion;  // acceptance criterion this check measures
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct StageOutput {
    std::string name;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<Check> checks;
    std::vector<std::pair<std::string, double>> constants;
    std::map<std::string, std::string> files;  // file name -> contents
};

struct Report {
    std::string name;
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::vector<StageOutput> stages;

    std::vector<Check> checks() const;
    nlohmann::json summary() const;
    std::string table() const;  // human-readable checks and constants
};

const std::vector<std::string>& pipeline_commands();

// command is one of forward, cgo, carleman, reconstruct, boundary, all;
// a failing stage throws the module's error unchanged
Report run_scenario(const Scenario& scenario, const std::string& command, int jobs = 1);

// summary.json, summary.txt and every stage file; throws Error when out is not writable
void emit_report(const Report& report, const std::filesystem::path& out);

}  // namespace calderon
