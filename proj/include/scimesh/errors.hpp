#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scimesh {

// Stable error identifiers. The name (see errc_name) is what CLIs print on
// stderr and what the gateway maps to HTTP statuses, so renaming one is a
// wire-format change.
enum class Errc {
    // token service
    TTL_EXCEEDS_PROFILE,
    UNKNOWN_SCOPE,
    MFA_REQUIRED,
    BAD_SIGNATURE,
    EXPIRED,
    REVOKED,
    MALFORMED,
    SCOPE_ESCALATION,
    TTL_ESCALATION,
    DEPTH_EXCEEDED,
    UNKNOWN_TOKEN,
    PROJECT_MISMATCH,

    // policy engine
    PARSE_ERROR,
    DUPLICATE_RULE_ID,
    INVALID_CONDITION,

    // gateway
    NOT_FOUND,
    FORBIDDEN,
    RATE_LIMITED,
    STORE_UNAVAILABLE,
    BACKEND_FAILURE,

    // scheduler
    QOS_NOT_ENTITLED,
    NODES_EXCEED_CLUSTER,
    DEPENDENCY_UNKNOWN,
    CYCLE_DETECTED,
    INVALID_WINDOW,
    UNKNOWN_JOB,

    // streaming node
    UNKNOWN_TEMPLATE,
    INVALID_TEMPLATE,
    TARGET_NOT_ALLOWED,
    BUFFER_EXCEEDS_TEMPLATE,
    MODE_NOT_ALLOWED,
    AUTH_REQUIRED,
    CIDR_REJECTED,
    CHANNEL_CLOSED,
    MESSAGE_TOO_LARGE,
    UNKNOWN_CHANNEL,

    // profiles
    UNKNOWN_PROFILE,
    INVALID_PROFILE,
    INVALID_MANIFEST,

    // scenario runner
    SCENARIO_PARSE_ERROR,

    // generic
    INVALID_ARGUMENT,
    IO_ERROR,
    CONFIG_ERROR,
};

std::string_view errc_name(Errc c);

/// Reverse of errc_name; nullopt for unknown names. CONFIG_ERROR must stay
/// the last enumerator for the lookup table to cover everything.
std::optional<Errc> errc_from_name(std::string_view name);

/// Domain exception carrying a stable error code plus human detail.
/// what() renders "NAME: detail"; detail() returns just the detail part.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
          code_(code),
          detail_(detail) {}

    explicit Error(Errc code) : std::runtime_error(std::string(errc_name(code))), code_(code) {}

    Errc code() const { return code_; }
    std::string_view name() const { return errc_name(code_); }
    const std::string& detail() const { return detail_; }

  private:
    Errc code_;
    std::string detail_;
};

}  // namespace scimesh
