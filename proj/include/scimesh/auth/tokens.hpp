#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scimesh/errors.hpp"
#include "scimesh/util.hpp"

namespace scimesh::auth {

/// Fixed scope vocabulary. "admin.*" is itself a grantable scope whose
/// trailing wildcard covers the whole admin.<x> action family.
const std::set<std::string>& scope_vocabulary();

/// True when `scope` grants `action`: exact match, or a trailing-segment
/// wildcard ("admin.*" covers "admin.policies").
bool scope_covers(const std::string& scope, const std::string& action);

/// True when any scope in the set covers the action.
bool scopes_cover(const std::set<std::string>& scopes, const std::string& action);

struct Claims {
    std::string token_id;  // 16 bytes as 32 lowercase hex chars
    std::string subject;
    std::string project;
    std::set<std::string> scopes;
    int64_t issued_at = 0;   // unix seconds
    int64_t expires_at = 0;  // unix seconds, exclusive
    std::optional<std::string> parent_id;
    bool mfa = false;
    int max_enclave = 0;  // highest enclave level the token may be used in

    nlohmann::json to_json() const;
    static Claims from_json(const nlohmann::json& j);  // throws Error(MALFORMED)

    /// Canonical byte form: compact JSON with sorted keys. Signing and the
    /// byte-identity invariant are defined over exactly these bytes.
    std::string canonical() const;
};

/// Issuance constraints taken from the active environment profile.
struct IssueLimits {
    int64_t max_ttl_seconds = 2592000;
    bool mfa_required = false;
    int max_delegation_depth = 4;
};

/// Issues, validates, delegates and revokes HMAC-SHA256 signed bearer tokens.
///
/// Wire form: base64url(canonical claims JSON) + "." + base64url(signature).
/// The registry records every issued token and its delegation parent;
/// revocation is transitive over that tree. All mutating calls serialize on
/// one internal lock; validation takes the same lock only for the registry
/// lookup, so the contract is linearizable issue/revoke/validate.
class TokenAuthority {
  public:
    TokenAuthority(std::string secret, IssueLimits limits, uint64_t id_seed);
    TokenAuthority(std::string secret, IssueLimits limits);

    /// Attach an append-only JSONL journal (one record per issue/revoke
    /// event). If the file already has events, the registry is rebuilt by
    /// replaying them first.
    void attach_journal(const std::string& path);

    void set_limits(const IssueLimits& limits);
    IssueLimits limits() const;

    std::string issue(const std::string& subject, const std::string& project,
                      const std::set<std::string>& scopes, int64_t ttl_seconds, bool mfa_flag,
                      int max_enclave, int64_t now);

    /// Full validation: signature, canonical form, registry/revocation state
    /// of the token and every ancestor, then expiry (exclusive boundary).
    Claims validate(const std::string& token, int64_t now) const;

    std::string delegate(const std::string& parent_token,
                         const std::set<std::string>& narrowed_scopes, int64_t ttl_seconds,
                         int64_t now);

    /// Revokes the token and every descendant. Returns how many live tokens
    /// this call invalidated.
    size_t revoke(const std::string& token_id);

    /// Signature + canonical-form check only (no registry or time checks).
    Claims decode_verified(const std::string& token) const;

    std::string encode(const Claims& claims) const;

    /// Delegation chain length from the root (root token = 0).
    int chain_depth(const std::string& token_id) const;

    std::optional<Claims> lookup(const std::string& token_id) const;

  private:
    struct Entry {
        Claims claims;
        bool revoked = false;
        std::vector<std::string> children;
    };

    std::string sign(std::string_view payload) const;
    void journal_append(const nlohmann::json& event);
    void register_locked(const Claims& claims);
    int depth_locked(const std::string& token_id) const;

    std::string secret_;
    IssueLimits limits_;
    util::IdGen idgen_;
    mutable std::mutex mu_;
    std::map<std::string, Entry> registry_;
    std::string journal_path_;
};

}  // namespace scimesh::auth
