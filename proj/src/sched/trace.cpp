#include "scimesh/sched/trace.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

#include "scimesh/errors.hpp"

using nlohmann::json;

namespace scimesh::sched {

namespace {

json spec_to_json(const JobSpec& s) {
    return json{{"job_id", s.job_id},
                {"project", s.project},
                {"subject", s.subject},
                {"nodes_requested", s.nodes_requested},
                {"walltime_seconds", s.walltime_seconds},
                {"qos_requested", s.qos_requested},
                {"depends_on", s.depends_on}};
}

JobSpec spec_from_json(const json& j) {
    JobSpec s;
    s.job_id = j.value("job_id", "");
    s.project = j.at("project");
    s.subject = j.value("subject", "");
    s.nodes_requested = j.at("nodes_requested");
    s.walltime_seconds = j.at("walltime_seconds");
    s.qos_requested = j.value("qos_requested", "batch");
    if (j.contains("depends_on"))
        for (const auto& d : j["depends_on"]) s.depends_on.insert(d.get<std::string>());
    return s;
}

Action::Type action_type_from(const std::string& name) {
    if (name == "start") return Action::Type::Start;
    if (name == "preempt_warn") return Action::Type::PreemptWarn;
    if (name == "kill") return Action::Type::Kill;
    if (name == "requeue") return Action::Type::Requeue;
    if (name == "complete") return Action::Type::Complete;
    if (name == "cancel") return Action::Type::Cancel;
    throw Error(Errc::PARSE_ERROR, "unknown action '" + name + "'");
}

}  // namespace

std::vector<TraceEntry> parse_trace(const std::string& text) {
    std::vector<TraceEntry> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            TraceEntry e;
            e.submit_time = j.at("submit_time");
            e.spec = spec_from_json(j.at("job"));
            out.push_back(std::move(e));
        } catch (const json::exception& e) {
            throw Error(Errc::PARSE_ERROR,
                        "trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string serialize_trace(const std::vector<TraceEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += json{{"submit_time", e.submit_time}, {"job", spec_to_json(e.spec)}}.dump();
        out += "\n";
    }
    return out;
}

std::string serialize_actions(const std::vector<Action>& actions) {
    std::string out;
    for (const auto& a : actions) {
        out += json{{"t", a.t},
                    {"action", action_name(a.type)},
                    {"job_id", a.job_id},
                    {"nodes", a.nodes},
                    {"detail", a.detail}}
                   .dump();
        out += "\n";
    }
    return out;
}

std::vector<Action> parse_actions(const std::string& text) {
    std::vector<Action> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Action a;
            a.t = j.at("t");
            a.type = action_type_from(j.at("action").get<std::string>());
            a.job_id = j.at("job_id");
            a.nodes = j.value("nodes", 0);
            a.detail = j.value("detail", "");
            out.push_back(std::move(a));
        } catch (const json::exception& e) {
            throw Error(Errc::PARSE_ERROR,
                        "action line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

ReplayResult replay_trace(const SchedulerConfig& config, const std::vector<TraceEntry>& entries,
                          int64_t until) {
    std::vector<TraceEntry> ordered = entries;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.submit_time < b.submit_time; });
    Scheduler sched(config);
    size_t next = 0;
    for (int64_t t = 0; t <= until; ++t) {
        while (next < ordered.size() && ordered[next].submit_time <= t) {
            const auto& e = ordered[next];
            sched.submit_job(e.spec, e.spec.project, t);
            ++next;
        }
        sched.schedule_step(t);
    }
    ReplayResult result;
    result.actions = sched.action_log();
    result.final_metrics = sched.metrics(until);
    return result;
}

}  // namespace scimesh::sched
