#include "scimesh/auth/tokens.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <fstream>
#include <sstream>

namespace scimesh::auth {

using nlohmann::json;

const std::set<std::string>& scope_vocabulary() {
    static const std::set<std::string> vocab = {
        "status.read", "jobs.submit",      "jobs.read", "jobs.cancel",
        "streams.provision", "streams.read", "admin.*",
    };
    return vocab;
}

bool scope_covers(const std::string& scope, const std::string& action) {
    if (scope == action) return true;
    if (scope.size() >= 2 && scope.ends_with(".*")) {
        std::string_view prefix(scope.data(), scope.size() - 1);  // keep the dot
        return action.size() > prefix.size() && action.starts_with(prefix);
    }
    return false;
}

bool scopes_cover(const std::set<std::string>& scopes, const std::string& action) {
    for (const auto& s : scopes)
        if (scope_covers(s, action)) return true;
    return false;
}

json Claims::to_json() const {
    json j;
    j["token_id"] = token_id;
    j["subject"] = subject;
    j["project"] = project;
    j["scopes"] = scopes;  // std::set serializes sorted
    j["issued_at"] = issued_at;
    j["expires_at"] = expires_at;
    if (parent_id) j["parent_id"] = *parent_id;
    j["mfa"] = mfa;
    j["max_enclave"] = max_enclave;
    return j;
}

Claims Claims::from_json(const json& j) {
    try {
        Claims c;
        c.token_id = j.at("token_id").get<std::string>();
        c.subject = j.at("subject").get<std::string>();
        c.project = j.at("project").get<std::string>();
        for (const auto& s : j.at("scopes")) c.scopes.insert(s.get<std::string>());
        c.issued_at = j.at("issued_at").get<int64_t>();
        c.expires_at = j.at("expires_at").get<int64_t>();
        if (j.contains("parent_id")) c.parent_id = j.at("parent_id").get<std::string>();
        c.mfa = j.at("mfa").get<bool>();
        c.max_enclave = j.at("max_enclave").get<int>();
        if (c.expires_at <= c.issued_at) throw Error(Errc::MALFORMED, "expires_at <= issued_at");
        if (c.scopes.empty()) throw Error(Errc::MALFORMED, "empty scope set");
        if (c.max_enclave < 0 || c.max_enclave > 3) throw Error(Errc::MALFORMED, "enclave level");
        if (c.token_id.size() != 32 || !util::hex_decode(c.token_id))
            throw Error(Errc::MALFORMED, "token_id");
        return c;
    } catch (const json::exception& e) {
        throw Error(Errc::MALFORMED, e.what());
    }
}

std::string Claims::canonical() const { return to_json().dump(); }

TokenAuthority::TokenAuthority(std::string secret, IssueLimits limits, uint64_t id_seed)
    : secret_(std::move(secret)), limits_(limits), idgen_(id_seed) {}

TokenAuthority::TokenAuthority(std::string secret, IssueLimits limits)
    : secret_(std::move(secret)), limits_(limits) {}

void TokenAuthority::attach_journal(const std::string& path) {
    std::lock_guard lk(mu_);
    journal_path_ = path;
    std::ifstream in(path);
    if (!in) return;  // fresh journal
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json event = json::parse(line, nullptr, false);
        if (event.is_discarded()) throw Error(Errc::IO_ERROR, "corrupt token journal line");
        const std::string kind = event.value("event", "");
        if (kind == "issue") {
            register_locked(Claims::from_json(event.at("claims")));
        } else if (kind == "revoke") {
            auto it = registry_.find(event.at("token_id").get<std::string>());
            if (it == registry_.end()) continue;
            std::vector<std::string> stack = {it->first};
            while (!stack.empty()) {
                auto id = stack.back();
                stack.pop_back();
                auto& entry = registry_.at(id);
                entry.revoked = true;
                for (const auto& ch : entry.children) stack.push_back(ch);
            }
        }
    }
}

void TokenAuthority::set_limits(const IssueLimits& limits) {
    std::lock_guard lk(mu_);
    limits_ = limits;
}

IssueLimits TokenAuthority::limits() const {
    std::lock_guard lk(mu_);
    return limits_;
}

std::string TokenAuthority::sign(std::string_view payload) const {
    unsigned char mac[EVP_MAX_MD_SIZE];
    unsigned int mac_len = 0;
    HMAC(EVP_sha256(), secret_.data(), static_cast<int>(secret_.size()),
         reinterpret_cast<const unsigned char*>(payload.data()), payload.size(), mac, &mac_len);
    return std::string(reinterpret_cast<char*>(mac), mac_len);
}

std::string TokenAuthority::encode(const Claims& claims) const {
    std::string payload = claims.canonical();
    std::string mac = sign(payload);
    return util::base64url_encode(
               {reinterpret_cast<const uint8_t*>(payload.data()), payload.size()}) +
           "." +
           util::base64url_encode({reinterpret_cast<const uint8_t*>(mac.data()), mac.size()});
}

Claims TokenAuthority::decode_verified(const std::string& token) const {
    auto dot = token.find('.');
    if (dot == std::string::npos || token.find('.', dot + 1) != std::string::npos)
        throw Error(Errc::MALFORMED, "expected two dot-separated parts");
    auto payload_bytes = util::base64url_decode(token.substr(0, dot));
    auto sig_bytes = util::base64url_decode(token.substr(dot + 1));
    if (!payload_bytes || !sig_bytes) throw Error(Errc::MALFORMED, "bad base64url");
    std::string payload(payload_bytes->begin(), payload_bytes->end());
    std::string expected = sign(payload);
    if (sig_bytes->size() != expected.size() ||
        CRYPTO_memcmp(sig_bytes->data(), expected.data(), expected.size()) != 0)
        throw Error(Errc::BAD_SIGNATURE);
    json j = json::parse(payload, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::MALFORMED, "claims not JSON");
    Claims claims = Claims::from_json(j);
    // Reject signed-but-non-canonical payloads so decode/re-encode is
    // byte-identical for every accepted token.
    if (claims.canonical() != payload) throw Error(Errc::MALFORMED, "non-canonical claims");
    return claims;
}

void TokenAuthority::register_locked(const Claims& claims) {
    auto [it, inserted] = registry_.emplace(claims.token_id, Entry{claims, false, {}});
    if (!inserted) throw Error(Errc::INVALID_ARGUMENT, "token_id collision");
    if (claims.parent_id) {
        auto parent = registry_.find(*claims.parent_id);
        if (parent != registry_.end()) parent->second.children.push_back(claims.token_id);
    }
}

void TokenAuthority::journal_append(const json& event) {
    if (journal_path_.empty()) return;
    std::ofstream out(journal_path_, std::ios::app);
    if (!out) throw Error(Errc::IO_ERROR, "token journal unavailable");
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw Error(Errc::IO_ERROR, "token journal write failed");
}

std::string TokenAuthority::issue(const std::string& subject, const std::string& project,
                                  const std::set<std::string>& scopes, int64_t ttl_seconds,
                                  bool mfa_flag, int max_enclave, int64_t now) {
    std::lock_guard lk(mu_);
    if (ttl_seconds <= 0 || ttl_seconds > limits_.max_ttl_seconds)
        throw Error(Errc::TTL_EXCEEDS_PROFILE,
                    "ttl " + std::to_string(ttl_seconds) + "s, profile cap " +
                        std::to_string(limits_.max_ttl_seconds) + "s");
    if (scopes.empty()) throw Error(Errc::INVALID_ARGUMENT, "empty scope set");
    for (const auto& s : scopes)
        if (!scope_vocabulary().contains(s)) throw Error(Errc::UNKNOWN_SCOPE, s);
    if (limits_.mfa_required && !mfa_flag)
        throw Error(Errc::MFA_REQUIRED, "profile requires multifactor issuance");
    if (max_enclave < 0 || max_enclave > 3)
        throw Error(Errc::INVALID_ARGUMENT, "enclave level out of range");

    Claims claims;
    claims.token_id = idgen_.next_hex();
    claims.subject = subject;
    claims.project = project;
    claims.scopes = scopes;
    claims.issued_at = now;
    claims.expires_at = now + ttl_seconds;
    claims.mfa = mfa_flag;
    claims.max_enclave = max_enclave;

    register_locked(claims);
    journal_append(json{{"event", "issue"}, {"claims", claims.to_json()}});
    return encode(claims);
}

Claims TokenAuthority::validate(const std::string& token, int64_t now) const {
    Claims claims = decode_verified(token);
    {
        std::lock_guard lk(mu_);
        auto it = registry_.find(claims.token_id);
        if (it == registry_.end()) throw Error(Errc::REVOKED, "token not live in registry");
        // Walk the delegation chain: a revoked or vanished ancestor kills
        // every descendant.
        const Entry* entry = &it->second;
        while (true) {
            if (entry->revoked) throw Error(Errc::REVOKED);
            if (!entry->claims.parent_id) break;
            auto parent = registry_.find(*entry->claims.parent_id);
            if (parent == registry_.end()) throw Error(Errc::REVOKED, "ancestor not live");
            entry = &parent->second;
        }
    }
    if (now >= claims.expires_at) throw Error(Errc::EXPIRED);
    return claims;
}

int TokenAuthority::depth_locked(const std::string& token_id) const {
    int depth = 0;
    auto it = registry_.find(token_id);
    while (it != registry_.end() && it->second.claims.parent_id) {
        ++depth;
        it = registry_.find(*it->second.claims.parent_id);
    }
    return depth;
}

int TokenAuthority::chain_depth(const std::string& token_id) const {
    std::lock_guard lk(mu_);
    return depth_locked(token_id);
}

std::optional<Claims> TokenAuthority::lookup(const std::string& token_id) const {
    std::lock_guard lk(mu_);
    auto it = registry_.find(token_id);
    if (it == registry_.end()) return std::nullopt;
    return it->second.claims;
}

std::string TokenAuthority::delegate(const std::string& parent_token,
                                     const std::set<std::string>& narrowed_scopes,
                                     int64_t ttl_seconds, int64_t now) {
    Claims parent = validate(parent_token, now);
    std::lock_guard lk(mu_);
    if (narrowed_scopes.empty()) throw Error(Errc::INVALID_ARGUMENT, "empty scope set");
    for (const auto& s : narrowed_scopes)
        if (!parent.scopes.contains(s)) throw Error(Errc::SCOPE_ESCALATION, s);
    if (ttl_seconds <= 0) throw Error(Errc::INVALID_ARGUMENT, "ttl must be positive");
    int64_t child_expiry = now + ttl_seconds;
    if (child_expiry > parent.expires_at)
        throw Error(Errc::TTL_ESCALATION, "child would outlive parent");
    if (depth_locked(parent.token_id) + 1 > limits_.max_delegation_depth)
        throw Error(Errc::DEPTH_EXCEEDED,
                    "profile limit " + std::to_string(limits_.max_delegation_depth));

    Claims child;
    child.token_id = idgen_.next_hex();
    child.subject = parent.subject;
    child.project = parent.project;  // delegation never crosses projects
    child.scopes = narrowed_scopes;
    child.issued_at = now;
    child.expires_at = child_expiry;
    child.parent_id = parent.token_id;
    child.mfa = parent.mfa;
    child.max_enclave = parent.max_enclave;

    register_locked(child);
    journal_append(json{{"event", "issue"}, {"claims", child.to_json()}});
    return encode(child);
}

size_t TokenAuthority::revoke(const std::string& token_id) {
    std::lock_guard lk(mu_);
    auto it = registry_.find(token_id);
    if (it == registry_.end()) throw Error(Errc::UNKNOWN_TOKEN, token_id);
    size_t invalidated = 0;
    std::vector<std::string> stack = {token_id};
    while (!stack.empty()) {
        auto id = stack.back();
        stack.pop_back();
        auto& entry = registry_.at(id);
        if (!entry.revoked) {
            entry.revoked = true;
            ++invalidated;
        }
        for (const auto& child : entry.children) stack.push_back(child);
    }
    journal_append(json{{"event", "revoke"}, {"token_id", token_id}});
    return invalidated;
}

}  // namespace scimesh::auth
