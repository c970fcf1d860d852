#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "scimesh/scenario/stream_tasks.hpp"

int main(int argc, char** argv) {
    CLI::App app{"scimesh stream consumer"};
    scimesh::scenario::ConsumerConfig cfg;
    std::string clock_kind = "real";  // accepted for symmetry; receiving is not paced
    bool json_out = false;

    app.add_option("--gateway", cfg.gateway_url, "gateway base URL")->required();
    app.add_option("--token", cfg.token, "bearer token")
        ->envname("SCIMESH_TOKEN")
        ->required();
    app.add_option("--channel", cfg.channel_id, "channel id")->required();
    app.add_option("--topic", cfg.topic);
    app.add_option("--expect", cfg.expected_count, "messages to receive")->required();
    app.add_option("--idle-timeout-ms", cfg.idle_timeout_ms, "give up after this quiet period");
    app.add_option("--clock", clock_kind, "real|simulated");
    app.add_flag("--json", json_out);
    CLI11_PARSE(app, argc, argv);

    try {
        auto s = scimesh::scenario::run_consumer(cfg);
        nlohmann::json out{{"received", s.received},
                           {"checksum", s.checksum},
                           {"complete", s.complete},
                           {"closed_early", s.closed_early}};
        if (json_out)
            std::cout << out.dump() << "\n";
        else
            std::cout << "received " << s.received << " checksum " << s.checksum
                      << (s.closed_early ? " (channel closed early)" : "") << "\n";
        return s.complete ? 0 : 2;
    } catch (const std::exception& e) {
        return tool::fail(e);
    }
}
