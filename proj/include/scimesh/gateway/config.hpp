#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace scimesh::gateway {

struct RateClassLimit {
    int capacity = 0;
    double refill_per_s = 0.0;
};

/// Cluster the fronted scheduler manages.
struct ClusterConfig {
    int node_count = 8;
    int64_t grace_seconds = 30;
    std::map<std::string, std::vector<std::string>> entitlements;  // project -> entitled tiers
};

/// Gateway settings: file-loaded knobs plus the effective limits a profile
/// imposes (see profiles::apply_profile).
struct Config {
    std::string listen_address = "127.0.0.1";
    int listen_port = 8080;
    std::string profile = "development";
    std::string policy_path;
    std::string audit_path = "audit.jsonl";
    std::string profile_override_path;  // optional JSON override file
    std::string token_journal_path;     // optional issue/revoke journal
    std::string templates_path;         // optional stream template registry
    std::string secret;                 // HMAC key; generated when empty
    std::map<std::string, RateClassLimit> rate_limits = default_rate_limits();
    ClusterConfig cluster;

    // Effective limits; defaults are the loosest tier and are tightened by
    // apply_profile.
    int64_t max_token_ttl_seconds = 2592000;
    bool mfa_required = false;
    int max_delegation_depth = 4;
    bool reservation_requires_approval = false;
    std::vector<std::string> allowed_stream_modes{"gateway_l7", "router_l4"};

    static std::map<std::string, RateClassLimit> default_rate_limits() {
        return {{"read", {100, 50.0}},
                {"submit", {10, 1.0}},
                {"admin", {20, 5.0}},
                {"stream_provision", {5, 1.0}}};
    }
};

/// Parses the JSON config file. Throws CONFIG_ERROR.
Config load_config_text(const std::string& text);
Config load_config(const std::string& path);

}  // namespace scimesh::gateway
