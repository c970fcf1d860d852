#include "scimesh/policy/engine.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <unordered_set>

#include "scimesh/errors.hpp"

using nlohmann::json;

namespace scimesh::policy {

const char* effect_name(Effect e) { return e == Effect::allow ? "allow" : "deny"; }

bool action_pattern_matches(const std::string& pattern, const std::string& action) {
    if (pattern == "*") return true;
    if (pattern.size() >= 2 && pattern.compare(pattern.size() - 2, 2, ".*") == 0) {
        // keep the dot: "jobs.*" covers "jobs.submit" but not "jobs" itself
        return action.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
    }
    return pattern == action;
}

namespace {

Condition parse_condition(const json& obj, const std::string& rule_id) {
    if (!obj.is_object() || obj.size() != 1)
        throw Error(Errc::INVALID_CONDITION,
                    "rule " + rule_id + ": condition must be a single-key object");
    Condition c;
    auto it = obj.begin();
    const std::string key = it.key();
    const json& value = it.value();
    if (key == "time_window") {
        if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() ||
            !value[1].is_number_integer())
            throw Error(Errc::INVALID_CONDITION,
                        "rule " + rule_id + ": time_window must be [start, end]");
        c.kind = Condition::Kind::time_window;
        c.window_start = value[0].get<int64_t>();
        c.window_end = value[1].get<int64_t>();
        if (c.window_start >= c.window_end)
            throw Error(Errc::INVALID_CONDITION,
                        "rule " + rule_id + ": time_window start must precede end");
    } else if (key == "enclave_max") {
        if (!value.is_number_integer() || value.get<int64_t>() < 0)
            throw Error(Errc::INVALID_CONDITION,
                        "rule " + rule_id + ": enclave_max must be a non-negative integer");
        c.kind = Condition::Kind::enclave_max;
        c.enclave_max = value.get<int>();
    } else if (key == "source_cidr") {
        if (!value.is_string())
            throw Error(Errc::INVALID_CONDITION,
                        "rule " + rule_id + ": source_cidr must be a string");
        auto cidr = util::parse_cidr(value.get<std::string>());
        if (!cidr)
            throw Error(Errc::INVALID_CONDITION, "rule " + rule_id + ": bad CIDR '" +
                                                     value.get<std::string>() + "'");
        c.kind = Condition::Kind::source_cidr;
        c.cidr = *cidr;
        c.cidr_text = value.get<std::string>();
    } else {
        throw Error(Errc::INVALID_CONDITION,
                    "rule " + rule_id + ": unknown condition '" + key + "'");
    }
    return c;
}

PolicyRule parse_rule(const json& obj) {
    if (!obj.is_object()) throw Error(Errc::PARSE_ERROR, "rule entries must be objects");
    PolicyRule rule;
    try {
        rule.rule_id = obj.at("rule_id").get<std::string>();
        std::string effect = obj.at("effect").get<std::string>();
        if (effect == "allow")
            rule.effect = Effect::allow;
        else if (effect == "deny")
            rule.effect = Effect::deny;
        else
            throw Error(Errc::PARSE_ERROR,
                        "rule " + rule.rule_id + ": effect must be allow or deny");
        rule.subjects = obj.at("subjects").get<std::string>();
        rule.actions = obj.at("actions").get<std::vector<std::string>>();
        rule.resources = obj.at("resources").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(Errc::PARSE_ERROR, std::string("bad rule: ") + e.what());
    }
    if (rule.rule_id.empty()) throw Error(Errc::PARSE_ERROR, "rule_id must be non-empty");
    if (auto it = obj.find("conditions"); it != obj.end()) {
        if (!it->is_array())
            throw Error(Errc::INVALID_CONDITION,
                        "rule " + rule.rule_id + ": conditions must be a list");
        for (const auto& cond : *it) rule.conditions.push_back(parse_condition(cond, rule.rule_id));
    }
    return rule;
}

bool subjects_match(const std::string& expr, const RequestCtx& ctx) {
    if (expr == "*") return true;
    if (expr.rfind("project:", 0) == 0) return ctx.project == expr.substr(8);
    return ctx.subject == expr;
}

bool condition_holds(const Condition& c, const RequestCtx& ctx) {
    switch (c.kind) {
        case Condition::Kind::time_window:
            return ctx.now >= c.window_start && ctx.now < c.window_end;
        case Condition::Kind::enclave_max:
            return ctx.enclave <= c.enclave_max;
        case Condition::Kind::source_cidr: {
            auto addr = util::parse_ipv4(ctx.source_ip);
            return addr && c.cidr.contains(*addr);
        }
    }
    return false;
}

const char* condition_label(const Condition& c) {
    switch (c.kind) {
        case Condition::Kind::time_window: return "time_window";
        case Condition::Kind::enclave_max: return "enclave_max";
        case Condition::Kind::source_cidr: return "source_cidr";
    }
    return "condition";
}

/// Returns nullopt on a full match, otherwise the first failing check.
std::optional<std::string> first_failure(const PolicyRule& rule, const RequestCtx& ctx) {
    if (!subjects_match(rule.subjects, ctx)) return "subjects";
    bool action_ok = std::any_of(rule.actions.begin(), rule.actions.end(), [&](const auto& p) {
        return action_pattern_matches(p, ctx.action);
    });
    if (!action_ok) return "actions";
    if (ctx.resource.compare(0, rule.resources.size(), rule.resources) != 0) return "resources";
    for (const auto& c : rule.conditions)
        if (!condition_holds(c, ctx)) return condition_label(c);
    return std::nullopt;
}

}  // namespace

PolicySet PolicySet::load(const std::string& document_text) {
    json doc;
    try {
        doc = json::parse(document_text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::PARSE_ERROR, e.what());  // nlohmann reports line/column
    }
    if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array())
        throw Error(Errc::PARSE_ERROR, "policy document needs a top-level rules list");

    PolicySet set;
    std::unordered_set<std::string> seen;
    for (const auto& entry : doc["rules"]) {
        auto rule = parse_rule(entry);
        if (!seen.insert(rule.rule_id).second)
            throw Error(Errc::DUPLICATE_RULE_ID, "duplicate rule_id '" + rule.rule_id + "'");
        set.rules_.push_back(std::move(rule));
    }
    return set;
}

Decision evaluate(const PolicySet& set, const RequestCtx& ctx) {
    const PolicyRule* first_allow = nullptr;
    const PolicyRule* first_deny = nullptr;
    for (const auto& rule : set.rules()) {
        if (first_failure(rule, ctx)) continue;
        if (rule.effect == Effect::deny) {
            if (!first_deny) first_deny = &rule;
        } else if (!first_allow) {
            first_allow = &rule;
        }
    }
    if (first_deny)
        return {Effect::deny, first_deny->rule_id, "denied by rule " + first_deny->rule_id};
    if (first_allow)
        return {Effect::allow, first_allow->rule_id, "allowed by rule " + first_allow->rule_id};
    return {Effect::deny, std::nullopt, "default-deny"};
}

std::vector<ExplainEntry> explain(const PolicySet& set, const RequestCtx& ctx) {
    std::vector<ExplainEntry> out;
    out.reserve(set.size());
    for (const auto& rule : set.rules()) {
        auto failure = first_failure(rule, ctx);
        out.push_back({rule.rule_id, !failure.has_value(), failure});
    }
    return out;
}

}  // namespace scimesh::policy
