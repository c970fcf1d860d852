#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "scimesh/auth/tokens.hpp"

using namespace scimesh;
using namespace scimesh::auth;

namespace {

TokenAuthority make_authority(IssueLimits limits = {}) {
    return TokenAuthority("test-secret-0123456789", limits, /*id_seed=*/42);
}

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::INVALID_ARGUMENT;
}

}  // namespace

TEST_CASE("issue computes expiry from ttl") {
    auto authority = make_authority();
    auto token = authority.issue("alice", "proj", {"jobs.submit"}, 3600, false, 0, 1000);
    auto claims = authority.validate(token, 1000);
    CHECK(claims.subject == "alice");
    CHECK(claims.issued_at == 1000);
    CHECK(claims.expires_at == 4600);
    CHECK_FALSE(claims.parent_id.has_value());
}

TEST_CASE("issue rejects non-positive and over-cap ttl") {
    auto authority = make_authority(IssueLimits{.max_ttl_seconds = 86400});
    CHECK(code_of([&] { authority.issue("a", "p", {"jobs.read"}, 0, false, 0, 0); }) ==
          Errc::TTL_EXCEEDS_PROFILE);
    // moderate-production style cap
    CHECK(code_of([&] { authority.issue("a", "p", {"jobs.read"}, 864000, false, 0, 0); }) ==
          Errc::TTL_EXCEEDS_PROFILE);
    CHECK_NOTHROW(authority.issue("a", "p", {"jobs.read"}, 86400, false, 0, 0));
}

TEST_CASE("issue rejects unknown scopes and enforces mfa") {
    auto authority = make_authority(IssueLimits{.mfa_required = true});
    CHECK(code_of([&] { authority.issue("a", "p", {"jobs.everything"}, 10, true, 0, 0); }) ==
          Errc::UNKNOWN_SCOPE);
    CHECK(code_of([&] { authority.issue("a", "p", {"jobs.read"}, 10, false, 0, 0); }) ==
          Errc::MFA_REQUIRED);
    CHECK_NOTHROW(authority.issue("a", "p", {"jobs.read"}, 10, true, 0, 0));
}

TEST_CASE("expiry boundary is exclusive") {
    auto authority = make_authority();
    auto token = authority.issue("alice", "proj", {"status.read"}, 100, false, 0, 1000);
    CHECK_NOTHROW(authority.validate(token, 1000));
    CHECK_NOTHROW(authority.validate(token, 1099));
    CHECK(code_of([&] { authority.validate(token, 1100); }) == Errc::EXPIRED);
}

TEST_CASE("delegation narrows scopes") {
    auto authority = make_authority();
    auto parent = authority.issue("alice", "proj", {"jobs.submit", "streams.read"}, 1000, false, 1, 0);
    auto child = authority.delegate(parent, {"streams.read"}, 500, 10);
    auto claims = authority.validate(child, 10);
    CHECK(claims.scopes == std::set<std::string>{"streams.read"});
    CHECK(claims.project == "proj");
    CHECK(claims.max_enclave == 1);
    CHECK(claims.parent_id.has_value());

    CHECK(code_of([&] { authority.delegate(parent, {"admin.*"}, 500, 10); }) ==
          Errc::SCOPE_ESCALATION);
    CHECK(code_of([&] { authority.delegate(parent, {"streams.read"}, 5000, 10); }) ==
          Errc::TTL_ESCALATION);
}

TEST_CASE("delegation depth stops at the profile limit") {
    auto authority = make_authority(IssueLimits{.max_delegation_depth = 2});
    auto t0 = authority.issue("alice", "proj", {"jobs.read"}, 100000, false, 0, 0);
    auto t1 = authority.delegate(t0, {"jobs.read"}, 90000, 1);
    auto t2 = authority.delegate(t1, {"jobs.read"}, 80000, 2);
    CHECK(code_of([&] { authority.delegate(t2, {"jobs.read"}, 70000, 3); }) ==
          Errc::DEPTH_EXCEEDED);
}

TEST_CASE("revocation is transitive and counts the subtree") {
    auto authority = make_authority();
    auto root = authority.issue("alice", "proj", {"jobs.read"}, 100000, false, 0, 0);
    auto root_id = authority.validate(root, 0).token_id;
    auto c1 = authority.delegate(root, {"jobs.read"}, 90000, 1);
    auto c2 = authority.delegate(root, {"jobs.read"}, 90000, 1);
    auto g1 = authority.delegate(c1, {"jobs.read"}, 80000, 2);

    SUBCASE("leaf") {
        auto g1_id = authority.validate(g1, 2).token_id;
        CHECK(authority.revoke(g1_id) == 1);
        CHECK(code_of([&] { authority.validate(g1, 3); }) == Errc::REVOKED);
        CHECK_NOTHROW(authority.validate(c1, 3));
    }
    SUBCASE("root with two children and one grandchild") {
        CHECK(authority.revoke(root_id) == 4);
        for (const auto& t : {root, c1, c2, g1})
            CHECK(code_of([&] { authority.validate(t, 3); }) == Errc::REVOKED);
    }
    SUBCASE("unknown id") {
        CHECK(code_of([&] { authority.revoke("deadbeefdeadbeefdeadbeefdeadbeef"); }) ==
              Errc::UNKNOWN_TOKEN);
    }
}

TEST_CASE("validation fails when a parent was revoked") {
    auto authority = make_authority();
    auto root = authority.issue("alice", "proj", {"jobs.read"}, 100000, false, 0, 0);
    auto child = authority.delegate(root, {"jobs.read"}, 90000, 1);
    authority.revoke(authority.validate(root, 1).token_id);
    CHECK(code_of([&] { authority.validate(child, 2); }) == Errc::REVOKED);
}

TEST_CASE("identical claims and secret produce identical token strings") {
    auto a = make_authority();
    Claims claims;
    claims.token_id = "00112233445566778899aabbccddeeff";
    claims.subject = "alice";
    claims.project = "proj";
    claims.scopes = {"jobs.read", "status.read"};
    claims.issued_at = 5;
    claims.expires_at = 50;
    claims.mfa = true;
    claims.max_enclave = 2;
    CHECK(a.encode(claims) == a.encode(claims));
    auto decoded = a.decode_verified(a.encode(claims));
    CHECK(decoded.canonical() == claims.canonical());
    // decode then re-encode is byte-identical
    CHECK(a.encode(decoded) == a.encode(claims));
}

TEST_CASE("journal replay reconstructs registry state") {
    std::string path = "tokens_journal_test.jsonl";
    std::remove(path.c_str());
    std::string root, child, root_id;
    {
        auto authority = make_authority();
        authority.attach_journal(path);
        root = authority.issue("alice", "proj", {"jobs.read"}, 100000, false, 0, 0);
        child = authority.delegate(root, {"jobs.read"}, 90000, 1);
        root_id = authority.validate(root, 1).token_id;
        authority.revoke(root_id);
    }
    auto replayed = make_authority();
    replayed.attach_journal(path);
    CHECK(code_of([&] { replayed.validate(root, 2); }) == Errc::REVOKED);
    CHECK(code_of([&] { replayed.validate(child, 2); }) == Errc::REVOKED);
    std::remove(path.c_str());
}

TEST_CASE("property: attenuation holds along random delegation chains") {
    auto authority = make_authority(IssueLimits{.max_delegation_depth = 6});
    std::mt19937_64 rng(7);
    std::vector<std::string> vocab(scope_vocabulary().begin(), scope_vocabulary().end());

    for (int iter = 0; iter < 300; ++iter) {
        std::set<std::string> scopes;
        size_t n = 1 + rng() % vocab.size();
        while (scopes.size() < n) scopes.insert(vocab[rng() % vocab.size()]);
        int64_t now = static_cast<int64_t>(rng() % 1000);
        int64_t ttl = 1000 + static_cast<int64_t>(rng() % 100000);
        auto token = authority.issue("user", "proj", scopes, ttl, false, 1 + int(rng() % 3), now);
        Claims prev = authority.validate(token, now);

        int chain_len = 1 + int(rng() % 5);
        for (int d = 0; d < chain_len; ++d) {
            std::vector<std::string> pool(prev.scopes.begin(), prev.scopes.end());
            std::set<std::string> narrowed;
            size_t keep = 1 + rng() % pool.size();
            while (narrowed.size() < keep) narrowed.insert(pool[rng() % pool.size()]);
            int64_t child_ttl = 1 + static_cast<int64_t>(rng() % (prev.expires_at - now));
            auto child_token = authority.delegate(token, narrowed, child_ttl, now);
            Claims child = authority.validate(child_token, now);

            CHECK(std::includes(prev.scopes.begin(), prev.scopes.end(), child.scopes.begin(),
                                child.scopes.end()));
            CHECK(child.expires_at <= prev.expires_at);
            CHECK(child.max_enclave <= prev.max_enclave);
            token = child_token;
            prev = child;
        }
    }
}

TEST_CASE("property: every single-bit flip is rejected") {
    auto authority = make_authority();
    auto token = authority.issue("alice", "proj", {"jobs.submit", "streams.read"}, 3600, true, 2, 12345);
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 500; ++iter) {
        std::string mutated = token;
        size_t pos = rng() % mutated.size();
        int bit = int(rng() % 8);
        mutated[pos] = static_cast<char>(mutated[pos] ^ (1 << bit));
        if (mutated == token) continue;
        try {
            authority.validate(mutated, 12345);
            FAIL("tampered token accepted: flip at ", pos, " bit ", bit);
        } catch (const Error& e) {
            CHECK((e.code() == Errc::BAD_SIGNATURE || e.code() == Errc::MALFORMED ||
                   e.code() == Errc::REVOKED));
        }
    }
}
