#include "scimesh/gateway/config.hpp"

#include <nlohmann/json.hpp>

#include "scimesh/errors.hpp"
#include "scimesh/util.hpp"

using nlohmann::json;

namespace scimesh::gateway {

Config load_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::CONFIG_ERROR, e.what());
    }
    if (!doc.is_object()) throw Error(Errc::CONFIG_ERROR, "config must be a JSON object");

    Config cfg;
    try {
        if (doc.contains("listen_address")) cfg.listen_address = doc["listen_address"];
        if (doc.contains("listen_port")) cfg.listen_port = doc["listen_port"];
        if (doc.contains("profile")) cfg.profile = doc["profile"];
        if (doc.contains("policy_path")) cfg.policy_path = doc["policy_path"];
        if (doc.contains("audit_path")) cfg.audit_path = doc["audit_path"];
        if (doc.contains("profile_override_path"))
            cfg.profile_override_path = doc["profile_override_path"];
        if (doc.contains("token_journal_path")) cfg.token_journal_path = doc["token_journal_path"];
        if (doc.contains("templates_path")) cfg.templates_path = doc["templates_path"];
        if (doc.contains("secret")) cfg.secret = doc["secret"];
        if (doc.contains("cluster")) {
            const auto& cl = doc["cluster"];
            if (cl.contains("node_count")) cfg.cluster.node_count = cl["node_count"];
            if (cl.contains("grace_seconds")) cfg.cluster.grace_seconds = cl["grace_seconds"];
            if (cl.contains("entitlements"))
                for (const auto& [project, tiers] : cl["entitlements"].items())
                    cfg.cluster.entitlements[project] =
                        tiers.get<std::vector<std::string>>();
        }
        if (doc.contains("rate_limits")) {
            for (const auto& [cls, limits] : doc["rate_limits"].items()) {
                RateClassLimit rl;
                rl.capacity = limits.at("capacity");
                rl.refill_per_s = limits.at("refill_per_s");
                if (rl.capacity < 1 || rl.refill_per_s <= 0)
                    throw Error(Errc::CONFIG_ERROR, "rate limit for '" + cls + "' must be positive");
                cfg.rate_limits[cls] = rl;
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::CONFIG_ERROR, std::string("bad config field: ") + e.what());
    }
    if (cfg.listen_port < 0 || cfg.listen_port > 65535)
        throw Error(Errc::CONFIG_ERROR, "listen_port out of range");
    if (cfg.cluster.node_count < 1 || cfg.cluster.grace_seconds < 0)
        throw Error(Errc::CONFIG_ERROR, "cluster sizes must be positive");
    return cfg;
}

Config load_config(const std::string& path) { return load_config_text(util::read_file(path)); }

}  // namespace scimesh::gateway
