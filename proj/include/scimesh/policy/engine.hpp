#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scimesh/util.hpp"

namespace scimesh::policy {

enum class Effect { allow, deny };

const char* effect_name(Effect e);

/// One condition attached to a rule. All conditions on a rule must hold.
struct Condition {
    enum class Kind { time_window, enclave_max, source_cidr };
    Kind kind = Kind::time_window;
    int64_t window_start = 0;  // time_window: [start, end)
    int64_t window_end = 0;
    int enclave_max = 0;
    util::Cidr cidr{};
    std::string cidr_text;
};

struct PolicyRule {
    std::string rule_id;
    Effect effect = Effect::deny;
    // "*", an exact subject name, or "project:<name>".
    std::string subjects;
    // Scope strings; a trailing ".*" segment (or bare "*") acts as a wildcard.
    std::vector<std::string> actions;
    // Path prefix.
    std::string resources;
    std::vector<Condition> conditions;
};

struct RequestCtx {
    std::string subject;
    std::string project;
    std::string action;    // concrete scope string, no wildcards
    std::string resource;  // path
    int64_t now = 0;
    std::string source_ip;  // dotted quad; empty when unknown
    int enclave = 0;
};

struct Decision {
    Effect verdict = Effect::deny;
    std::optional<std::string> matched_rule;
    std::string reason;
};

struct ExplainEntry {
    std::string rule_id;
    bool matched = false;
    // First check that failed: "subjects", "actions", "resources",
    // "time_window", "enclave_max", or "source_cidr".
    std::optional<std::string> failing_condition;
};

/// Immutable once loaded; evaluation never mutates it.
class PolicySet {
  public:
    PolicySet() = default;

    /// Parses the JSON policy document {"version": 1, "rules": [...]}.
    /// Throws PARSE_ERROR, DUPLICATE_RULE_ID, INVALID_CONDITION.
    static PolicySet load(const std::string& document_text);

    const std::vector<PolicyRule>& rules() const { return rules_; }
    size_t size() const { return rules_.size(); }

  private:
    std::vector<PolicyRule> rules_;
};

Decision evaluate(const PolicySet& set, const RequestCtx& ctx);
std::vector<ExplainEntry> explain(const PolicySet& set, const RequestCtx& ctx);

/// True when `pattern` covers the concrete `action` ("jobs.*" covers
/// "jobs.submit"; "*" covers everything; otherwise exact).
bool action_pattern_matches(const std::string& pattern, const std::string& action);

}  // namespace scimesh::policy
