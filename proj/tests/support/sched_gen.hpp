#pragma once

// Generators and independent oracles for the scheduler tests and the
// acceptance suite.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "scimesh/sched/scheduler.hpp"
#include "scimesh/sched/trace.hpp"

namespace testgen {

/// Exhaustive subset search under the documented lexicographic cost:
/// (victim count, lost node-seconds, priority sum, sorted id tuple).
inline std::vector<std::string> oracle_select_victims(
    int needed, int free, const std::vector<scimesh::sched::VictimCandidate>& cands) {
    if (free >= needed) return {};
    size_t n = cands.size();
    bool found = false;
    std::tuple<int, long long, long long, std::vector<std::string>> best;
    for (uint32_t mask = 1; mask < (1u << n); ++mask) {
        int sum = free, count = 0;
        long long lost = 0, prio = 0;
        std::vector<std::string> ids;
        for (size_t i = 0; i < n; ++i) {
            if (!(mask & (1u << i))) continue;
            sum += cands[i].nodes;
            ++count;
            lost += (long long)cands[i].nodes * cands[i].elapsed_seconds;
            prio += cands[i].priority;
            ids.push_back(cands[i].job_id);
        }
        if (sum < needed) continue;
        std::sort(ids.begin(), ids.end());
        auto t = std::make_tuple(count, lost, prio, ids);
        if (!found || t < best) {
            best = t;
            found = true;
        }
    }
    if (!found) return {};
    return std::get<3>(best);
}

struct VictimInstance {
    int needed = 0;
    int free = 0;
    std::vector<scimesh::sched::VictimCandidate> candidates;
};

/// Random instance with <= 8 nodes and <= 6 running jobs.
inline VictimInstance random_victim_instance(std::mt19937_64& rng) {
    VictimInstance inst;
    int cluster = 8;
    int jobs = int(rng() % 7);  // 0..6
    int used = 0;
    static const char* suffixes = "abcdefghijklmnopqrstuvwxyz";
    std::vector<int> order(26);
    for (int i = 0; i < 26; ++i) order[size_t(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < jobs; ++i) {
        int nodes = 1 + int(rng() % 4);
        if (used + nodes > cluster) break;
        used += nodes;
        scimesh::sched::VictimCandidate c;
        c.job_id = std::string("j-") + suffixes[size_t(order[size_t(i)])];
        c.nodes = nodes;
        c.elapsed_seconds = int64_t(rng() % 500);
        c.priority = rng() % 2 ? 100 : 500;
        inst.candidates.push_back(c);
    }
    int idle = cluster - used;
    inst.free = idle > 0 ? int(rng() % (idle + 1)) : 0;
    inst.needed = 1 + int(rng() % cluster);
    return inst;
}

/// Random workload trace: mixed tiers, several projects, feasible sizes.
inline std::vector<scimesh::sched::TraceEntry> random_trace(std::mt19937_64& rng, int n_jobs,
                                                            int cluster_nodes, int64_t horizon) {
    static const std::vector<std::string> tiers{"batch", "batch", "batch", "interactive", "urgent"};
    static const std::vector<std::string> projects{"astro", "bio", "climate"};
    std::vector<scimesh::sched::TraceEntry> out;
    for (int i = 0; i < n_jobs; ++i) {
        scimesh::sched::TraceEntry e;
        e.submit_time = int64_t(rng() % uint64_t(horizon));
        e.spec.job_id = "";  // assigned at submit
        e.spec.project = projects[rng() % projects.size()];
        e.spec.subject = "u" + std::to_string(rng() % 5);
        e.spec.nodes_requested = 1 + int(rng() % uint64_t(cluster_nodes));
        e.spec.walltime_seconds = 1 + int64_t(rng() % 60);
        e.spec.qos_requested = tiers[rng() % tiers.size()];
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.submit_time < b.submit_time; });
    // Replay assigns ids in submit order; pin them here so both replays agree.
    for (size_t i = 0; i < out.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "j-%06zu", i + 1);
        out[i].spec.job_id = buf;
    }
    return out;
}

inline scimesh::sched::SchedulerConfig permissive_config(int nodes, int64_t grace = 30) {
    scimesh::sched::SchedulerConfig cfg;
    cfg.node_count = nodes;
    cfg.grace_seconds = grace;
    cfg.default_entitlement = {"batch", "interactive", "urgent"};
    return cfg;
}

}  // namespace testgen
