#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <functional>
#include <random>

#include "scimesh/errors.hpp"
#include "scimesh/policy/engine.hpp"
#include "support/policy_gen.hpp"

using namespace scimesh;
using namespace scimesh::policy;
using nlohmann::json;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::INVALID_ARGUMENT;
}

// Independent re-implementation of the evaluation semantics, written against
// the documented behavior rather than the engine code.
namespace oracle {

bool act_match(const std::string& pat, const std::string& a) {
    if (pat == "*") return true;
    if (pat.size() >= 2 && pat.rfind(".*") == pat.size() - 2) {
        std::string prefix = pat.substr(0, pat.size() - 1);  // keep the dot
        return a.size() >= prefix.size() && a.substr(0, prefix.size()) == prefix;
    }
    return pat == a;
}

bool ip_in_cidr(const std::string& ip, const std::string& cidr) {
    unsigned a, b, c, d, pa, pb, pc, pd, plen;
    if (std::sscanf(ip.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4) return false;
    if (std::sscanf(cidr.c_str(), "%u.%u.%u.%u/%u", &pa, &pb, &pc, &pd, &plen) != 5) return false;
    uint32_t addr = (a << 24) | (b << 16) | (c << 8) | d;
    uint32_t net = (pa << 24) | (pb << 16) | (pc << 8) | pd;
    if (plen == 0) return true;
    uint32_t mask = plen >= 32 ? 0xffffffffu : ~((1u << (32 - plen)) - 1);
    return (addr & mask) == (net & mask);
}

bool rule_matches(const PolicyRule& r, const RequestCtx& ctx) {
    if (r.subjects != "*") {
        if (r.subjects.rfind("project:", 0) == 0) {
            if (ctx.project != r.subjects.substr(8)) return false;
        } else if (ctx.subject != r.subjects) {
            return false;
        }
    }
    bool any_action = false;
    for (const auto& p : r.actions) any_action = any_action || act_match(p, ctx.action);
    if (!any_action) return false;
    if (ctx.resource.rfind(r.resources, 0) != 0) return false;
    for (const auto& cond : r.conditions) {
        switch (cond.kind) {
            case Condition::Kind::time_window:
                if (ctx.now < cond.window_start || ctx.now >= cond.window_end) return false;
                break;
            case Condition::Kind::enclave_max:
                if (ctx.enclave > cond.enclave_max) return false;
                break;
            case Condition::Kind::source_cidr:
                if (!ip_in_cidr(ctx.source_ip, cond.cidr_text)) return false;
                break;
        }
    }
    return true;
}

Decision evaluate(const PolicySet& set, const RequestCtx& ctx) {
    for (const auto& r : set.rules())
        if (r.effect == Effect::deny && rule_matches(r, ctx))
            return {Effect::deny, r.rule_id, ""};
    for (const auto& r : set.rules())
        if (r.effect == Effect::allow && rule_matches(r, ctx))
            return {Effect::allow, r.rule_id, ""};
    return {Effect::deny, std::nullopt, "default-deny"};
}

}  // namespace oracle

std::string doc_of(const json& rules) {
    return json{{"version", 1}, {"rules", rules}}.dump();
}

}  // namespace

TEST_CASE("load accepts an empty rule list") {
    auto set = PolicySet::load(R"({"version":1,"rules":[]})");
    CHECK(set.size() == 0);
}

TEST_CASE("load rejects structural problems") {
    CHECK(code_of([] { PolicySet::load("{nope"); }) == Errc::PARSE_ERROR);
    CHECK(code_of([] { PolicySet::load(R"({"version":1})"); }) == Errc::PARSE_ERROR);

    json rule = {{"rule_id", "r1"},
                 {"effect", "allow"},
                 {"subjects", "*"},
                 {"actions", {"jobs.read"}},
                 {"resources", "/v1"}};
    CHECK(code_of([&] { PolicySet::load(doc_of(json::array({rule, rule}))); }) ==
          Errc::DUPLICATE_RULE_ID);

    json bad_window = rule;
    bad_window["conditions"] = json::array({{{"time_window", {100, 100}}}});
    CHECK(code_of([&] { PolicySet::load(doc_of(json::array({bad_window}))); }) ==
          Errc::INVALID_CONDITION);

    json bad_cidr = rule;
    bad_cidr["conditions"] = json::array({{{"source_cidr", "10.0.0.0/40"}}});
    CHECK(code_of([&] { PolicySet::load(doc_of(json::array({bad_cidr}))); }) ==
          Errc::INVALID_CONDITION);

    json unknown_cond = rule;
    unknown_cond["conditions"] = json::array({{{"weekday", 3}}});
    CHECK(code_of([&] { PolicySet::load(doc_of(json::array({unknown_cond}))); }) ==
          Errc::INVALID_CONDITION);
}

TEST_CASE("parse errors carry position info") {
    try {
        PolicySet::load("{\"version\":1,\n\"rules\": [nope]}");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::PARSE_ERROR);
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
}

TEST_CASE("empty set denies everything by default") {
    PolicySet set;
    RequestCtx ctx{"alice", "photon", "jobs.submit", "/v1/jobs", 100, "10.0.0.1", 0};
    auto d = evaluate(set, ctx);
    CHECK(d.verdict == Effect::deny);
    CHECK_FALSE(d.matched_rule.has_value());
    CHECK(d.reason == "default-deny");
}

TEST_CASE("wildcard action and prefix resource match") {
    auto set = PolicySet::load(doc_of(json::array({{{"rule_id", "allow-jobs"},
                                                    {"effect", "allow"},
                                                    {"subjects", "alice"},
                                                    {"actions", {"jobs.*"}},
                                                    {"resources", "/v1/jobs"}}})));
    RequestCtx ctx{"alice", "photon", "jobs.submit", "/v1/jobs/42", 100, "10.0.0.1", 0};
    auto d = evaluate(set, ctx);
    CHECK(d.verdict == Effect::allow);
    CHECK(d.matched_rule == "allow-jobs");

    ctx.subject = "bob";
    CHECK(evaluate(set, ctx).verdict == Effect::deny);
    ctx.subject = "alice";
    ctx.action = "streams.read";
    CHECK(evaluate(set, ctx).verdict == Effect::deny);
    ctx.action = "jobs.submit";
    ctx.resource = "/v2/jobs";
    CHECK(evaluate(set, ctx).verdict == Effect::deny);
}

TEST_CASE("deny dominates a matching allow") {
    auto set = PolicySet::load(doc_of(json::array(
        {{{"rule_id", "allow-jobs"},
          {"effect", "allow"},
          {"subjects", "alice"},
          {"actions", {"jobs.*"}},
          {"resources", "/v1/jobs"}},
         {{"rule_id", "deny-external"},
          {"effect", "deny"},
          {"subjects", "*"},
          {"actions", {"*"}},
          {"resources", ""},
          {"conditions", json::array({{{"source_cidr", "10.0.0.0/8"}}})}}})));
    RequestCtx ctx{"alice", "photon", "jobs.submit", "/v1/jobs/42", 100, "10.1.2.3", 0};
    auto d = evaluate(set, ctx);
    CHECK(d.verdict == Effect::deny);
    CHECK(d.matched_rule == "deny-external");
}

TEST_CASE("project subjects and time windows") {
    auto set = PolicySet::load(doc_of(json::array(
        {{{"rule_id", "window"},
          {"effect", "allow"},
          {"subjects", "project:photon"},
          {"actions", {"streams.read"}},
          {"resources", "/v1/streams"},
          {"conditions", json::array({{{"time_window", {1000, 2000}}}})}}})));
    RequestCtx ctx{"zed", "photon", "streams.read", "/v1/streams/7", 1000, "", 0};
    CHECK(evaluate(set, ctx).verdict == Effect::allow);
    ctx.now = 1999;
    CHECK(evaluate(set, ctx).verdict == Effect::allow);
    ctx.now = 2000;  // half-open upper bound
    CHECK(evaluate(set, ctx).verdict == Effect::deny);
    ctx.now = 999;
    CHECK(evaluate(set, ctx).verdict == Effect::deny);
    ctx.now = 1500;
    ctx.project = "fusion";
    CHECK(evaluate(set, ctx).verdict == Effect::deny);
}

TEST_CASE("explain lists every rule with its outcome") {
    PolicySet empty;
    RequestCtx ctx{"alice", "photon", "jobs.read", "/v1/jobs", 5, "", 0};
    CHECK(explain(empty, ctx).empty());

    auto set = PolicySet::load(doc_of(json::array({{{"rule_id", "r0"},
                                                    {"effect", "allow"},
                                                    {"subjects", "bob"},
                                                    {"actions", {"jobs.read"}},
                                                    {"resources", "/v1"}},
                                                   {{"rule_id", "r1"},
                                                    {"effect", "allow"},
                                                    {"subjects", "alice"},
                                                    {"actions", {"jobs.read"}},
                                                    {"resources", "/v1"}}})));
    auto entries = explain(set, ctx);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].rule_id == "r0");
    CHECK_FALSE(entries[0].matched);
    CHECK(entries[0].failing_condition == "subjects");
    CHECK(entries[1].rule_id == "r1");
    CHECK(entries[1].matched);
    CHECK_FALSE(entries[1].failing_condition.has_value());
}

TEST_CASE("explain reports the first failing check") {
    auto set = PolicySet::load(doc_of(json::array(
        {{{"rule_id", "r0"},
          {"effect", "allow"},
          {"subjects", "*"},
          {"actions", {"jobs.read"}},
          {"resources", "/v1/jobs"},
          {"conditions", json::array({{{"enclave_max", 1}}})}}})));
    RequestCtx ctx{"alice", "photon", "jobs.read", "/v1/jobs", 5, "", 3};
    auto entries = explain(set, ctx);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].failing_condition == "enclave_max");

    ctx.action = "jobs.cancel";
    CHECK(explain(set, ctx)[0].failing_condition == "actions");
    ctx.action = "jobs.read";
    ctx.resource = "/v1/streams";
    CHECK(explain(set, ctx)[0].failing_condition == "resources");
}

TEST_CASE("property: engine agrees with an independent oracle") {
    std::mt19937_64 rng(2024);
    for (int iter = 0; iter < 1500; ++iter) {
        auto set = PolicySet::load(testgen::random_policy_document(rng));
        auto ctx = testgen::random_ctx(rng);
        auto got = evaluate(set, ctx);
        auto want = oracle::evaluate(set, ctx);
        CHECK(got.verdict == want.verdict);
        CHECK(got.matched_rule == want.matched_rule);
        if (!want.matched_rule) CHECK(got.reason == "default-deny");
    }
}

TEST_CASE("property: adding a matching deny rule forces deny") {
    std::mt19937_64 rng(77);
    for (int iter = 0; iter < 800; ++iter) {
        json rules = json::parse(testgen::random_policy_document(rng))["rules"];
        auto ctx = testgen::random_ctx(rng);
        json deny = {{"rule_id", "zz-deny"},
                     {"effect", "deny"},
                     {"subjects", ctx.subject},
                     {"actions", {ctx.action}},
                     {"resources", ""}};
        rules.insert(rules.begin() + int(rng() % (rules.size() + 1)), deny);
        auto d = evaluate(PolicySet::load(doc_of(rules)), ctx);
        CHECK(d.verdict == Effect::deny);
    }
}

TEST_CASE("property: removing a non-matched rule leaves the decision unchanged") {
    std::mt19937_64 rng(123);
    int exercised = 0;
    for (int iter = 0; iter < 800; ++iter) {
        json rules = json::parse(testgen::random_policy_document(rng))["rules"];
        if (rules.empty()) continue;
        auto ctx = testgen::random_ctx(rng);
        auto set = PolicySet::load(doc_of(rules));
        auto before = evaluate(set, ctx);
        auto entries = explain(set, ctx);
        std::vector<size_t> unmatched;
        for (size_t i = 0; i < entries.size(); ++i)
            if (!entries[i].matched) unmatched.push_back(i);
        if (unmatched.empty()) continue;
        rules.erase(rules.begin() + int(unmatched[rng() % unmatched.size()]));
        auto after = evaluate(PolicySet::load(doc_of(rules)), ctx);
        CHECK(after.verdict == before.verdict);
        CHECK(after.matched_rule == before.matched_rule);
        CHECK(after.reason == before.reason);
        ++exercised;
    }
    CHECK(exercised > 300);
}

TEST_CASE("property: evaluation is pure and consistent with explain") {
    std::mt19937_64 rng(31337);
    for (int iter = 0; iter < 800; ++iter) {
        auto set = PolicySet::load(testgen::random_policy_document(rng));
        auto ctx = testgen::random_ctx(rng);
        auto first = evaluate(set, ctx);
        auto second = evaluate(set, ctx);
        CHECK(first.verdict == second.verdict);
        CHECK(first.matched_rule == second.matched_rule);
        CHECK(first.reason == second.reason);

        if (first.matched_rule) {
            bool found = false;
            for (const auto& entry : explain(set, ctx)) {
                if (entry.rule_id == *first.matched_rule) {
                    found = true;
                    CHECK(entry.matched);
                }
            }
            CHECK(found);
        }
        if (first.verdict == Effect::allow) {
            REQUIRE(first.matched_rule.has_value());
            bool is_allow = false;
            for (const auto& r : set.rules())
                if (r.rule_id == *first.matched_rule) is_allow = (r.effect == Effect::allow);
            CHECK(is_allow);
        }
    }
}
