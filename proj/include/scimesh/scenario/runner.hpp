#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace scimesh::scenario {

struct AssertionResult {
    std::string text;      // "metric op expected"
    std::string observed;  // value actually read
    bool pass = false;
};

struct StepResult {
    int64_t at = 0;
    std::string action;
    bool ok = false;        // the action itself succeeded
    std::string error;      // "NAME: detail" when ok is false
    std::vector<AssertionResult> assertions;
    nlohmann::json output;  // action-specific, deterministic fields only
};

struct ScenarioReport {
    std::string name;
    bool pass = false;  // every step ok and every assertion passed
    std::vector<StepResult> steps;

    nlohmann::json to_json() const;
};

/// Runs a scenario document against a freshly started in-process stack
/// (gateway + HTTP server + data plane) on a simulated clock. Structural
/// problems — bad JSON, unknown actions, malformed or unresolvable
/// assertions — throw SCENARIO_PARSE_ERROR; step failures and failed
/// assertions are recorded in the report instead.
///
/// Document shape:
///   {
///     "name": "...", "seed": 1, "start_seconds": 1700000000,
///     "config":   { ...gateway config overrides... },
///     "policies": { ...policy document loaded at boot... },
///     "templates": [ ...channel templates registered at boot... ],
///     "steps": [ {"at": s, "action": "...", "args": {...},
///                 "assert": [{"metric": "...", "op": "==", "value": x}]} ]
///   }
ScenarioReport run_scenario_text(const std::string& document_text,
                                 const std::string& default_name = "scenario");

/// Reads the file and runs it; IO_ERROR if unreadable.
ScenarioReport run_scenario_file(const std::string& path);

}  // namespace scimesh::scenario
