#pragma once

// Random policy documents and request contexts, shared by the policy unit
// tests and the acceptance suite.

#include <nlohmann/json.hpp>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "scimesh/policy/engine.hpp"

namespace testgen {

inline const std::vector<std::string>& subject_exprs() {
    static const std::vector<std::string> v{"*",     "alice",          "bob",
                                            "carol", "project:photon", "project:beamline"};
    return v;
}

inline const std::vector<std::string>& action_patterns() {
    static const std::vector<std::string> v{"*",         "jobs.*",     "jobs.submit",
                                            "jobs.read", "streams.*",  "streams.read",
                                            "admin.*",   "status.read"};
    return v;
}

inline const std::vector<std::string>& resource_prefixes() {
    static const std::vector<std::string> v{"", "/v1", "/v1/jobs", "/v1/streams",
                                            "/v1/admin/tokens"};
    return v;
}

inline const std::vector<std::string>& cidr_blocks() {
    static const std::vector<std::string> v{"10.0.0.0/8", "192.168.1.0/24", "0.0.0.0/0",
                                            "172.16.4.0/22"};
    return v;
}

inline nlohmann::json random_rule(std::mt19937_64& rng, int idx) {
    nlohmann::json rule;
    rule["rule_id"] = "r" + std::to_string(idx);
    rule["effect"] = (rng() % 3 == 0) ? "deny" : "allow";
    rule["subjects"] = subject_exprs()[rng() % subject_exprs().size()];
    std::set<std::string> acts;
    size_t n_actions = 1 + rng() % 3;
    while (acts.size() < n_actions) acts.insert(action_patterns()[rng() % action_patterns().size()]);
    rule["actions"] = acts;
    rule["resources"] = resource_prefixes()[rng() % resource_prefixes().size()];
    nlohmann::json conds = nlohmann::json::array();
    if (rng() % 3 == 0) {
        int64_t start = int64_t(rng() % 1500);
        conds.push_back({{"time_window", {start, start + 1 + int64_t(rng() % 1500)}}});
    }
    if (rng() % 4 == 0) conds.push_back({{"enclave_max", int(rng() % 4)}});
    if (rng() % 4 == 0) conds.push_back({{"source_cidr", cidr_blocks()[rng() % cidr_blocks().size()]}});
    if (!conds.empty()) rule["conditions"] = conds;
    return rule;
}

inline std::string random_policy_document(std::mt19937_64& rng, int max_rules = 8) {
    nlohmann::json doc;
    doc["version"] = 1;
    auto rules = nlohmann::json::array();
    int n = int(rng() % (max_rules + 1));
    for (int i = 0; i < n; ++i) rules.push_back(random_rule(rng, i));
    doc["rules"] = rules;
    return doc.dump();
}

inline scimesh::policy::RequestCtx random_ctx(std::mt19937_64& rng) {
    static const std::vector<std::string> subjects{"alice", "bob", "carol", "dave"};
    static const std::vector<std::string> projects{"photon", "beamline", "fusion"};
    static const std::vector<std::string> actions{"jobs.submit",  "jobs.read",
                                                  "jobs.cancel",  "streams.read",
                                                  "streams.provision", "admin.tokens",
                                                  "status.read"};
    static const std::vector<std::string> resources{"/v1/jobs", "/v1/jobs/42", "/v1/streams/7",
                                                    "/v1/admin/tokens", "/healthz"};
    static const std::vector<std::string> ips{"10.1.2.3", "192.168.1.77", "172.16.5.9", "8.8.8.8",
                                              ""};
    scimesh::policy::RequestCtx ctx;
    ctx.subject = subjects[rng() % subjects.size()];
    ctx.project = projects[rng() % projects.size()];
    ctx.action = actions[rng() % actions.size()];
    ctx.resource = resources[rng() % resources.size()];
    ctx.now = int64_t(rng() % 3500);
    ctx.source_ip = ips[rng() % ips.size()];
    ctx.enclave = int(rng() % 4);
    return ctx;
}

}  // namespace testgen
