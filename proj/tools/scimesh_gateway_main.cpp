#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "common.hpp"
#include "scimesh/gateway/gateway.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scimesh gateway server"};
    std::string config_path;
    std::string profile_override;
    std::string listen = "127.0.0.1";
    std::string clock_kind = "real";
    std::string bootstrap;
    int port = 0;
    uint64_t seed = 0;
    int64_t start_seconds = 1700000000;
    bool json_out = false;

    app.add_option("--config", config_path, "gateway config file")->required();
    app.add_option("--profile-override", profile_override,
                   "run under this profile instead of the configured one");
    app.add_option("--listen", listen, "bind address");
    app.add_option("--port", port, "bind port (0 = ephemeral)");
    app.add_option("--seed", seed, "id generator seed (0 = random)");
    app.add_option("--clock", clock_kind, "real|simulated");
    app.add_option("--start-seconds", start_seconds, "simulated clock start");
    app.add_option("--bootstrap-admin", bootstrap,
                   "subject:project — print an admin token for this identity at startup");
    app.add_flag("--json", json_out, "machine-readable output");
    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = scimesh::gateway::load_config(config_path);
        if (!profile_override.empty()) cfg.profile = profile_override;
        auto clock = tool::make_clock(clock_kind, start_seconds);
        scimesh::gateway::Gateway gw(cfg, *clock, seed);
        scimesh::gateway::GatewayServer server(gw);
        uint16_t bound = server.start(listen, static_cast<uint16_t>(port));

        nlohmann::json banner{{"listening", listen},
                              {"port", bound},
                              {"profile", gw.profile().name},
                              {"audit_path", gw.effective_config().audit_path}};
        if (!bootstrap.empty()) {
            auto colon = bootstrap.find(':');
            if (colon == std::string::npos)
                throw scimesh::Error(scimesh::Errc::INVALID_ARGUMENT,
                                     "--bootstrap-admin wants subject:project");
            auto ttl = gw.effective_config().max_token_ttl_seconds;
            banner["admin_token"] = gw.issue_token(bootstrap.substr(0, colon),
                                                   bootstrap.substr(colon + 1), {"admin.*"},
                                                   ttl, true, 3);
        }
        if (json_out) {
            std::cout << banner.dump() << std::endl;
        } else {
            std::cout << "listening on " << listen << ":" << bound << " (profile "
                      << gw.profile().name << ")" << std::endl;
            if (banner.contains("admin_token"))
                std::cout << "admin token: " << banner["admin_token"].get<std::string>()
                          << std::endl;
        }

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
        return 0;
    } catch (const std::exception& e) {
        return tool::fail(e);
    }
}
