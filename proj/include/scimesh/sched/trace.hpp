#pragma once

#include <string>
#include <vector>

#include "scimesh/sched/scheduler.hpp"

namespace scimesh::sched {

struct TraceEntry {
    int64_t submit_time = 0;
    JobSpec spec;
};

/// JSONL, one entry per line: {"submit_time": t, "job": {...}}.
/// Throws PARSE_ERROR.
std::vector<TraceEntry> parse_trace(const std::string& text);
std::string serialize_trace(const std::vector<TraceEntry>& entries);

/// JSONL action log, one action per line.
std::string serialize_actions(const std::vector<Action>& actions);
std::vector<Action> parse_actions(const std::string& text);  // throws PARSE_ERROR

struct ReplayResult {
    std::vector<Action> actions;
    Metrics final_metrics;
};

/// Replays a trace: submits land right before the step of their second;
/// steps run each second from 0 through `until`.
ReplayResult replay_trace(const SchedulerConfig& config, const std::vector<TraceEntry>& entries,
                          int64_t until);

}  // namespace scimesh::sched
