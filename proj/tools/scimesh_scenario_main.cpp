#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "scimesh/scenario/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"scimesh scenario runner"};
    std::string file;
    std::string clock_kind = "simulated";  // scenarios always run on the simulated clock
    bool json_out = false;

    app.add_option("--file", file, "scenario JSON file")->required();
    app.add_option("--clock", clock_kind, "simulated (scenarios are deterministic replays)");
    app.add_flag("--json", json_out, "print the full report as JSON");
    CLI11_PARSE(app, argc, argv);

    try {
        auto report = scimesh::scenario::run_scenario_file(file);
        if (json_out) {
            std::cout << report.to_json().dump(2) << "\n";
        } else {
            for (const auto& s : report.steps) {
                std::cout << "[" << s.at << "s] " << s.action << " "
                          << (s.ok ? "ok" : "FAILED") << (s.error.empty() ? "" : " " + s.error)
                          << "\n";
                for (const auto& a : s.assertions)
                    std::cout << "       " << (a.pass ? "pass" : "FAIL") << "  " << a.text
                              << "  (observed " << a.observed << ")\n";
            }
            std::cout << (report.pass ? "PASS" : "FAIL") << " " << report.name << "\n";
        }
        return report.pass ? 0 : 1;
    } catch (const scimesh::Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == scimesh::Errc::SCENARIO_PARSE_ERROR ? 2 : 1;
    } catch (const std::exception& e) {
        return tool::fail(e);
    }
}
