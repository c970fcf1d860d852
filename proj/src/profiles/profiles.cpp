#include "scimesh/profiles/profiles.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "scimesh/errors.hpp"

using nlohmann::json;

namespace scimesh::profiles {

namespace {

const std::set<std::string>& known_stream_modes() {
    static const std::set<std::string> v{"gateway_l7", "router_l4"};
    return v;
}

bool mode_allowed(const std::vector<std::string>& allowed, const std::string& mode) {
    return std::find(allowed.begin(), allowed.end(), mode) != allowed.end();
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ",";
        out += s;
    }
    return out.empty() ? "(none)" : out;
}

}  // namespace

std::vector<EnvironmentProfile> default_table() {
    std::vector<EnvironmentProfile> t(4);
    t[0] = {"development", 0, 2592000, false, 4, false, {"gateway_l7", "router_l4"}, std::nullopt, {}};
    t[1] = {"open_production", 1, 604800, false, 3, true, {"gateway_l7", "router_l4"}, std::nullopt, {}};
    t[2] = {"moderate_production", 2, 86400, true, 2, true, {"gateway_l7"}, std::nullopt, {}};
    t[3] = {"leadership", 3, 86400, true, 2, true, {"gateway_l7"}, 0.20, {}};
    return t;
}

void validate_monotone(const std::vector<EnvironmentProfile>& table) {
    for (size_t i = 1; i < table.size(); ++i) {
        const auto& lo = table[i - 1];
        const auto& hi = table[i];
        if (hi.max_token_ttl_seconds > lo.max_token_ttl_seconds)
            throw Error(Errc::INVALID_PROFILE,
                        hi.name + ": token ttl cap exceeds " + lo.name + "'s");
        if (hi.max_delegation_depth > lo.max_delegation_depth)
            throw Error(Errc::INVALID_PROFILE,
                        hi.name + ": delegation depth cap exceeds " + lo.name + "'s");
        if (lo.mfa_required_at_issuance && !hi.mfa_required_at_issuance)
            throw Error(Errc::INVALID_PROFILE, hi.name + ": drops the mfa requirement of " + lo.name);
        for (const auto& mode : hi.allowed_stream_modes)
            if (!mode_allowed(lo.allowed_stream_modes, mode))
                throw Error(Errc::INVALID_PROFILE,
                            hi.name + ": allows stream mode '" + mode + "' that " + lo.name +
                                " forbids");
    }
}

std::vector<EnvironmentProfile> apply_overrides(std::vector<EnvironmentProfile> table,
                                                const std::string& override_json_text) {
    json doc;
    try {
        doc = json::parse(override_json_text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::INVALID_PROFILE, e.what());
    }
    if (!doc.is_object()) throw Error(Errc::INVALID_PROFILE, "override must be a JSON object");

    for (const auto& [name, patch] : doc.items()) {
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const auto& p) { return p.name == name; });
        if (it == table.end())
            throw Error(Errc::UNKNOWN_PROFILE, "override names unknown profile '" + name + "'");
        try {
            if (patch.contains("max_token_ttl_seconds")) {
                it->max_token_ttl_seconds = patch["max_token_ttl_seconds"];
                if (it->max_token_ttl_seconds <= 0)
                    throw Error(Errc::INVALID_PROFILE, name + ": ttl cap must be positive");
            }
            if (patch.contains("mfa_required_at_issuance"))
                it->mfa_required_at_issuance = patch["mfa_required_at_issuance"];
            if (patch.contains("max_delegation_depth")) {
                it->max_delegation_depth = patch["max_delegation_depth"];
                if (it->max_delegation_depth < 0)
                    throw Error(Errc::INVALID_PROFILE, name + ": depth cap must be >= 0");
            }
            if (patch.contains("reservation_requires_approval"))
                it->reservation_requires_approval = patch["reservation_requires_approval"];
            if (patch.contains("allowed_stream_modes")) {
                std::vector<std::string> modes = patch["allowed_stream_modes"];
                for (const auto& m : modes)
                    if (!known_stream_modes().count(m))
                        throw Error(Errc::INVALID_PROFILE, name + ": unknown stream mode '" + m + "'");
                it->allowed_stream_modes = modes;
            }
            if (patch.contains("min_nodes_fraction_leadership")) {
                double f = patch["min_nodes_fraction_leadership"];
                if (f < 0.0 || f > 1.0)
                    throw Error(Errc::INVALID_PROFILE, name + ": fraction must be in [0,1]");
                it->min_nodes_fraction_leadership = f;
            }
            if (patch.contains("metadata"))
                for (const auto& [k, v] : patch["metadata"].items())
                    it->metadata[k] = v.get<std::string>();
        } catch (const json::exception& e) {
            throw Error(Errc::INVALID_PROFILE, name + ": " + e.what());
        }
    }
    validate_monotone(table);
    return table;
}

const EnvironmentProfile& find_profile(const std::vector<EnvironmentProfile>& table,
                                       const std::string& name) {
    for (const auto& p : table)
        if (p.name == name) return p;
    throw Error(Errc::UNKNOWN_PROFILE, "no profile named '" + name + "'");
}

EnvironmentProfile load_profile(const std::string& name) {
    static const std::vector<EnvironmentProfile> table = default_table();
    return find_profile(table, name);
}

WorkflowManifest WorkflowManifest::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::INVALID_MANIFEST, e.what());
    }
    WorkflowManifest m;
    try {
        m.workflow = doc.at("workflow");
        m.auth_method = doc.at("auth_method");
        m.max_token_ttl_seconds = doc.at("max_token_ttl_seconds");
        m.delegation_depth = doc.at("delegation_depth");
        if (doc.contains("endpoints_used"))
            m.endpoints_used = doc["endpoints_used"].get<std::vector<std::string>>();
        if (doc.contains("stream_modes_used"))
            m.stream_modes_used = doc["stream_modes_used"].get<std::vector<std::string>>();
        if (doc.contains("qos_tiers_requested"))
            m.qos_tiers_requested = doc["qos_tiers_requested"].get<std::vector<std::string>>();
        m.nodes_fraction = doc.value("nodes_fraction", 0.0);
    } catch (const json::exception& e) {
        throw Error(Errc::INVALID_MANIFEST, e.what());
    }
    if (m.auth_method != "token_mfa" && m.auth_method != "token" && m.auth_method != "none")
        throw Error(Errc::INVALID_MANIFEST, "auth_method must be token_mfa, token, or none");
    if (m.max_token_ttl_seconds < 0) throw Error(Errc::INVALID_MANIFEST, "ttl must be >= 0");
    if (m.delegation_depth < 0) throw Error(Errc::INVALID_MANIFEST, "delegation_depth must be >= 0");
    if (m.nodes_fraction < 0.0 || m.nodes_fraction > 1.0)
        throw Error(Errc::INVALID_MANIFEST, "nodes_fraction must be in [0,1]");
    for (const auto& mode : m.stream_modes_used)
        if (!known_stream_modes().count(mode))
            throw Error(Errc::INVALID_MANIFEST, "unknown stream mode '" + mode + "'");
    return m;
}

Report check_promotion_readiness(const WorkflowManifest& manifest,
                                 const EnvironmentProfile& target) {
    Report report;
    auto violation = [&](std::string rule, std::string observed, std::string required) {
        report.violations.push_back({std::move(rule), std::move(observed), std::move(required)});
    };

    // Emitted in rule-name order.
    std::vector<std::string> bad_modes;
    for (const auto& mode : manifest.stream_modes_used)
        if (!mode_allowed(target.allowed_stream_modes, mode)) bad_modes.push_back(mode);
    if (!bad_modes.empty())
        violation("allowed_stream_modes", join(bad_modes), join(target.allowed_stream_modes));

    if (manifest.delegation_depth > target.max_delegation_depth)
        violation("max_delegation_depth", std::to_string(manifest.delegation_depth),
                  "<= " + std::to_string(target.max_delegation_depth));

    if (manifest.max_token_ttl_seconds > target.max_token_ttl_seconds)
        violation("max_token_ttl_seconds", std::to_string(manifest.max_token_ttl_seconds),
                  "<= " + std::to_string(target.max_token_ttl_seconds));

    if (target.mfa_required_at_issuance && manifest.auth_method != "token_mfa")
        violation("mfa_required", manifest.auth_method, "token_mfa");

    if (target.min_nodes_fraction_leadership &&
        manifest.nodes_fraction < *target.min_nodes_fraction_leadership) {
        char obs[32], req[32];
        std::snprintf(obs, sizeof obs, "%.2f", manifest.nodes_fraction);
        std::snprintf(req, sizeof req, ">= %.2f", *target.min_nodes_fraction_leadership);
        violation("min_nodes_fraction_leadership", obs, req);
    }

    report.pass = report.violations.empty();
    return report;
}

gateway::Config apply_profile(const EnvironmentProfile& profile, gateway::Config config) {
    config.profile = profile.name;
    config.max_token_ttl_seconds =
        std::min(config.max_token_ttl_seconds, profile.max_token_ttl_seconds);
    config.mfa_required = config.mfa_required || profile.mfa_required_at_issuance;
    config.max_delegation_depth = std::min(config.max_delegation_depth, profile.max_delegation_depth);
    config.reservation_requires_approval =
        config.reservation_requires_approval || profile.reservation_requires_approval;
    std::vector<std::string> modes;
    for (const auto& m : config.allowed_stream_modes)
        if (mode_allowed(profile.allowed_stream_modes, m)) modes.push_back(m);
    config.allowed_stream_modes = std::move(modes);
    return config;
}

}  // namespace scimesh::profiles
