#include "scimesh/errors.hpp"

namespace scimesh {

std::string_view errc_name(Errc c) {
    switch (c) {
        case Errc::TTL_EXCEEDS_PROFILE: return "TTL_EXCEEDS_PROFILE";
        case Errc::UNKNOWN_SCOPE: return "UNKNOWN_SCOPE";
        case Errc::MFA_REQUIRED: return "MFA_REQUIRED";
        case Errc::BAD_SIGNATURE: return "BAD_SIGNATURE";
        case Errc::EXPIRED: return "EXPIRED";
        case Errc::REVOKED: return "REVOKED";
        case Errc::MALFORMED: return "MALFORMED";
        case Errc::SCOPE_ESCALATION: return "SCOPE_ESCALATION";
        case Errc::TTL_ESCALATION: return "TTL_ESCALATION";
        case Errc::DEPTH_EXCEEDED: return "DEPTH_EXCEEDED";
        case Errc::UNKNOWN_TOKEN: return "UNKNOWN_TOKEN";
        case Errc::PROJECT_MISMATCH: return "PROJECT_MISMATCH";
        case Errc::PARSE_ERROR: return "PARSE_ERROR";
        case Errc::DUPLICATE_RULE_ID: return "DUPLICATE_RULE_ID";
        case Errc::INVALID_CONDITION: return "INVALID_CONDITION";
        case Errc::NOT_FOUND: return "NOT_FOUND";
        case Errc::FORBIDDEN: return "FORBIDDEN";
        case Errc::RATE_LIMITED: return "RATE_LIMITED";
        case Errc::STORE_UNAVAILABLE: return "STORE_UNAVAILABLE";
        case Errc::BACKEND_FAILURE: return "BACKEND_FAILURE";
        case Errc::QOS_NOT_ENTITLED: return "QOS_NOT_ENTITLED";
        case Errc::NODES_EXCEED_CLUSTER: return "NODES_EXCEED_CLUSTER";
        case Errc::DEPENDENCY_UNKNOWN: return "DEPENDENCY_UNKNOWN";
        case Errc::CYCLE_DETECTED: return "CYCLE_DETECTED";
        case Errc::INVALID_WINDOW: return "INVALID_WINDOW";
        case Errc::UNKNOWN_JOB: return "UNKNOWN_JOB";
        case Errc::UNKNOWN_TEMPLATE: return "UNKNOWN_TEMPLATE";
        case Errc::INVALID_TEMPLATE: return "INVALID_TEMPLATE";
        case Errc::TARGET_NOT_ALLOWED: return "TARGET_NOT_ALLOWED";
        case Errc::BUFFER_EXCEEDS_TEMPLATE: return "BUFFER_EXCEEDS_TEMPLATE";
        case Errc::MODE_NOT_ALLOWED: return "MODE_NOT_ALLOWED";
        case Errc::AUTH_REQUIRED: return "AUTH_REQUIRED";
        case Errc::CIDR_REJECTED: return "CIDR_REJECTED";
        case Errc::CHANNEL_CLOSED: return "CHANNEL_CLOSED";
        case Errc::MESSAGE_TOO_LARGE: return "MESSAGE_TOO_LARGE";
        case Errc::UNKNOWN_CHANNEL: return "UNKNOWN_CHANNEL";
        case Errc::UNKNOWN_PROFILE: return "UNKNOWN_PROFILE";
        case Errc::INVALID_PROFILE: return "INVALID_PROFILE";
        case Errc::INVALID_MANIFEST: return "INVALID_MANIFEST";
        case Errc::SCENARIO_PARSE_ERROR: return "SCENARIO_PARSE_ERROR";
        case Errc::INVALID_ARGUMENT: return "INVALID_ARGUMENT";
        case Errc::IO_ERROR: return "IO_ERROR";
        case Errc::CONFIG_ERROR: return "CONFIG_ERROR";
    }
    return "UNKNOWN_ERROR";
}

std::optional<Errc> errc_from_name(std::string_view name) {
    static const auto* table = [] {
        auto* m = new std::map<std::string_view, Errc>;
        for (int i = 0; i <= int(Errc::CONFIG_ERROR); ++i) {
            Errc c = Errc(i);
            (*m)[errc_name(c)] = c;
        }
        return m;
    }();
    auto it = table->find(name);
    if (it == table->end()) return std::nullopt;
    return it->second;
}

}  // namespace scimesh
