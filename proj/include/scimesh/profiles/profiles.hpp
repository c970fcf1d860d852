#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scimesh/gateway/config.hpp"

namespace scimesh::profiles {

/// One enclave on the development → leadership pathway. Constraints tighten
/// with level.
struct EnvironmentProfile {
    std::string name;  // development | open_production | moderate_production | leadership
    int level = 0;     // 0..3
    int64_t max_token_ttl_seconds = 0;
    bool mfa_required_at_issuance = false;
    int max_delegation_depth = 0;
    bool reservation_requires_approval = false;
    std::vector<std::string> allowed_stream_modes;  // "gateway_l7", "router_l4"
    std::optional<double> min_nodes_fraction_leadership;
    std::map<std::string, std::string> metadata;  // informational only
};

/// What a workflow declares about itself when asking to be promoted.
struct WorkflowManifest {
    std::string workflow;
    std::string auth_method;  // token_mfa | token | none
    int64_t max_token_ttl_seconds = 0;
    int delegation_depth = 0;
    std::vector<std::string> endpoints_used;  // scope strings
    std::vector<std::string> stream_modes_used;
    std::vector<std::string> qos_tiers_requested;
    double nodes_fraction = 0.0;

    /// Throws INVALID_MANIFEST.
    static WorkflowManifest from_json_text(const std::string& text);
};

struct Violation {
    std::string rule;
    std::string observed;
    std::string required;
};

struct Report {
    bool pass = false;
    std::vector<Violation> violations;  // ordered by rule name
};

/// The built-in four-profile table, level order.
std::vector<EnvironmentProfile> default_table();

/// Applies a JSON override document keyed by profile name, then re-validates
/// monotone tightening. Throws INVALID_PROFILE.
std::vector<EnvironmentProfile> apply_overrides(std::vector<EnvironmentProfile> table,
                                                const std::string& override_json_text);

/// Throws INVALID_PROFILE when ttl/depth/mfa do not tighten with level.
void validate_monotone(const std::vector<EnvironmentProfile>& table);

/// Throws UNKNOWN_PROFILE.
const EnvironmentProfile& find_profile(const std::vector<EnvironmentProfile>& table,
                                       const std::string& name);
EnvironmentProfile load_profile(const std::string& name);

Report check_promotion_readiness(const WorkflowManifest& manifest,
                                 const EnvironmentProfile& target);

/// Clamps the config's effective limits to the profile's. Idempotent.
gateway::Config apply_profile(const EnvironmentProfile& profile, gateway::Config config);

}  // namespace scimesh::profiles
