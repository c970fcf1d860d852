#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "scimesh/scenario/stream_tasks.hpp"

int main(int argc, char** argv) {
    CLI::App app{"scimesh stream producer"};
    scimesh::scenario::ProducerConfig cfg;
    std::string clock_kind = "real";
    int64_t start_seconds = 1700000000;
    uint32_t channel = 0;
    bool json_out = false;

    app.add_option("--gateway", cfg.gateway_url, "gateway base URL")->required();
    app.add_option("--token", cfg.token, "bearer token")
        ->envname("SCIMESH_TOKEN")
        ->required();
    app.add_option("--template", cfg.template_id, "channel template to provision from");
    app.add_option("--target", cfg.internal_target, "internal target host:port");
    app.add_option("--channel", channel, "publish into an existing channel instead");
    app.add_option("--topic", cfg.topic);
    app.add_option("--size", cfg.message_bytes, "payload bytes per message");
    app.add_option("--rate", cfg.rate_per_s, "messages per second");
    app.add_option("--duration", cfg.duration_seconds, "seconds to stream");
    app.add_option("--seed", cfg.seed, "payload generator seed");
    app.add_option("--clock", clock_kind, "real|simulated (simulated finishes instantly)");
    app.add_option("--start-seconds", start_seconds, "simulated clock start");
    app.add_flag("--json", json_out);
    CLI11_PARSE(app, argc, argv);

    try {
        if (channel != 0) cfg.channel_id = channel;
        auto clock = tool::make_clock(clock_kind, start_seconds);
        auto s = scimesh::scenario::run_producer(cfg, *clock);
        nlohmann::json out{{"channel_id", s.channel_id},  {"data_port", s.data_port},
                           {"sent", s.sent},              {"rejected", s.rejected},
                           {"achieved_rate", s.achieved_rate}, {"checksum", s.checksum}};
        if (json_out)
            std::cout << out.dump() << "\n";
        else
            std::cout << "sent " << s.sent << " rejected " << s.rejected << " rate "
                      << s.achieved_rate << "/s checksum " << s.checksum << " (channel "
                      << s.channel_id << ")\n";
        return 0;
    } catch (const std::exception& e) {
        return tool::fail(e);
    }
}
