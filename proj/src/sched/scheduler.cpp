#include "scimesh/sched/scheduler.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>

#include "scimesh/errors.hpp"

namespace scimesh::sched {

const std::map<std::string, TierInfo>& tiers() {
    static const std::map<std::string, TierInfo> t{
        {"batch", {"batch", 100, {}}},
        {"interactive", {"interactive", 500, {"batch"}}},
        {"urgent", {"urgent", 900, {"batch", "interactive"}}},
    };
    return t;
}

int tier_priority(const std::string& name) {
    auto it = tiers().find(name);
    if (it == tiers().end()) throw Error(Errc::INVALID_ARGUMENT, "unknown tier '" + name + "'");
    return it->second.priority;
}

bool tier_may_preempt(const std::string& requester, const std::string& victim) {
    auto it = tiers().find(requester);
    return it != tiers().end() && it->second.may_preempt.count(victim) > 0;
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::pending: return "pending";
        case Phase::running: return "running";
        case Phase::preempted: return "preempted";
        case Phase::completed: return "completed";
        case Phase::cancelled: return "cancelled";
    }
    return "?";
}

const char* action_name(Action::Type t) {
    switch (t) {
        case Action::Type::Start: return "start";
        case Action::Type::PreemptWarn: return "preempt_warn";
        case Action::Type::Kill: return "kill";
        case Action::Type::Requeue: return "requeue";
        case Action::Type::Complete: return "complete";
        case Action::Type::Cancel: return "cancel";
    }
    return "?";
}

// --- victim selection ---------------------------------------------------

namespace {

struct VictimCost {
    long long lost = 0;
    long long priority = 0;
    std::vector<std::string> ids;  // kept sorted by construction

    bool better_than(const VictimCost& other) const {
        if (lost != other.lost) return lost < other.lost;
        if (priority != other.priority) return priority < other.priority;
        return ids < other.ids;
    }
};

}  // namespace

std::vector<std::string> select_victims(int needed_nodes, int free_nodes,
                                        const std::vector<VictimCandidate>& candidates) {
    if (free_nodes >= needed_nodes) return {};
    int need = needed_nodes - free_nodes;

    // Fewest victims first: the smallest k whose k largest candidates cover
    // the deficit.
    std::vector<int> sizes;
    sizes.reserve(candidates.size());
    for (const auto& c : candidates) sizes.push_back(c.nodes);
    std::sort(sizes.rbegin(), sizes.rend());
    int k_min = 0, covered = 0;
    while (k_min < int(sizes.size()) && covered < need) covered += sizes[k_min++];
    if (covered < need) return {};

    // Among subsets of size k_min covering the deficit, minimize
    // (lost node-seconds, priority sum, sorted id tuple). Processing
    // candidates in id order keeps each partial id tuple sorted, and with
    // equal counts the comparison is dominance-safe.
    std::vector<VictimCandidate> ordered = candidates;
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.job_id < b.job_id; });

    std::vector<std::vector<std::optional<VictimCost>>> dp(
        size_t(k_min) + 1, std::vector<std::optional<VictimCost>>(size_t(need) + 1));
    dp[0][0] = VictimCost{};
    for (const auto& cand : ordered) {
        for (int c = k_min - 1; c >= 0; --c) {
            for (int s = need; s >= 0; --s) {
                if (!dp[c][s]) continue;
                int ns = std::min(need, s + cand.nodes);
                VictimCost next = *dp[c][s];
                next.lost += (long long)cand.nodes * cand.elapsed_seconds;
                next.priority += cand.priority;
                next.ids.push_back(cand.job_id);
                auto& slot = dp[c + 1][ns];
                if (!slot || next.better_than(*slot)) slot = std::move(next);
            }
        }
    }
    if (!dp[k_min][need]) return {};  // defensive; k_min guarantees a cover
    return dp[k_min][need]->ids;
}

// --- scheduler ----------------------------------------------------------

Scheduler::Scheduler(SchedulerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.node_count < 1) throw Error(Errc::INVALID_ARGUMENT, "node_count must be positive");
    if (cfg_.grace_seconds < 0) throw Error(Errc::INVALID_ARGUMENT, "grace_seconds must be >= 0");
    for (const auto& hr : cfg_.hard_reservations)
        if (hr.start >= hr.end || hr.node_count < 0 || hr.node_count > cfg_.node_count)
            throw Error(Errc::INVALID_WINDOW, "bad hard reservation");
    nodes_.assign(size_t(cfg_.node_count), "");
}

std::string Scheduler::next_job_id() {
    char buf[16];
    std::snprintf(buf, sizeof buf, "j-%06lld", (long long)++job_seq_);
    return buf;
}

const std::set<std::string>& Scheduler::entitled_tiers(const std::string& project) const {
    auto it = cfg_.entitlements.find(project);
    return it != cfg_.entitlements.end() ? it->second : cfg_.default_entitlement;
}

void Scheduler::validate_spec(const JobSpec& spec, const std::string& claim_project) const {
    if (spec.project != claim_project)
        throw Error(Errc::PROJECT_MISMATCH,
                    "token project '" + claim_project + "' cannot submit for '" + spec.project + "'");
    if (spec.nodes_requested < 1) throw Error(Errc::INVALID_ARGUMENT, "nodes_requested must be >= 1");
    if (spec.walltime_seconds < 1)
        throw Error(Errc::INVALID_ARGUMENT, "walltime_seconds must be >= 1");
    if (!tiers().count(spec.qos_requested))
        throw Error(Errc::INVALID_ARGUMENT, "unknown tier '" + spec.qos_requested + "'");
    if (!entitled_tiers(spec.project).count(spec.qos_requested))
        throw Error(Errc::QOS_NOT_ENTITLED,
                    "project '" + spec.project + "' is not entitled to " + spec.qos_requested);
    if (spec.nodes_requested > cfg_.node_count)
        throw Error(Errc::NODES_EXCEED_CLUSTER,
                    std::to_string(spec.nodes_requested) + " nodes requested on a " +
                        std::to_string(cfg_.node_count) + "-node cluster");
}

std::string Scheduler::submit_job(JobSpec spec, const std::string& claim_project, int64_t now) {
    validate_spec(spec, claim_project);
    for (const auto& dep : spec.depends_on)
        if (!jobs_.count(dep))
            throw Error(Errc::DEPENDENCY_UNKNOWN, "depends_on references unknown job '" + dep + "'");
    if (spec.job_id.empty()) spec.job_id = next_job_id();
    if (jobs_.count(spec.job_id))
        throw Error(Errc::INVALID_ARGUMENT, "duplicate job_id '" + spec.job_id + "'");
    Job job;
    job.spec = spec;
    job.submit_time = now;
    std::string id = spec.job_id;
    jobs_.emplace(id, std::move(job));
    return id;
}

std::vector<std::string> Scheduler::submit_workflow(std::vector<JobSpec> specs,
                                                    const std::string& claim_project, int64_t now) {
    std::set<std::string> batch_ids;
    for (auto& spec : specs) {
        validate_spec(spec, claim_project);
        if (spec.job_id.empty()) spec.job_id = next_job_id();
        if (jobs_.count(spec.job_id) || !batch_ids.insert(spec.job_id).second)
            throw Error(Errc::INVALID_ARGUMENT, "duplicate job_id '" + spec.job_id + "'");
    }
    // Dependencies must resolve inside the batch or to already-known jobs.
    for (const auto& spec : specs)
        for (const auto& dep : spec.depends_on)
            if (!batch_ids.count(dep) && !jobs_.count(dep))
                throw Error(Errc::DEPENDENCY_UNKNOWN,
                            "depends_on references unknown job '" + dep + "'");
    // Cycle check over intra-batch edges (existing jobs cannot close a cycle).
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> rdeps;
    for (const auto& spec : specs) {
        indegree.emplace(spec.job_id, 0);
        for (const auto& dep : spec.depends_on) {
            if (!batch_ids.count(dep)) continue;
            ++indegree[spec.job_id];
            rdeps[dep].push_back(spec.job_id);
        }
    }
    std::queue<std::string> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.push(id);
    size_t resolved = 0;
    while (!ready.empty()) {
        auto id = ready.front();
        ready.pop();
        ++resolved;
        for (const auto& nxt : rdeps[id])
            if (--indegree[nxt] == 0) ready.push(nxt);
    }
    if (resolved != specs.size())
        throw Error(Errc::CYCLE_DETECTED, "workflow dependency graph has a cycle");

    std::vector<std::string> ids;
    for (auto& spec : specs) {
        Job job;
        job.spec = spec;
        job.submit_time = now;
        ids.push_back(spec.job_id);
        jobs_.emplace(spec.job_id, std::move(job));
    }
    return ids;
}

void Scheduler::cancel_job(const std::string& job_id, const std::string& claim_project, bool admin,
                           int64_t now) {
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(Errc::UNKNOWN_JOB, "no job '" + job_id + "'");
    Job& job = it->second;
    if (!admin && job.spec.project != claim_project)
        throw Error(Errc::PROJECT_MISMATCH, "token project cannot cancel '" + job_id + "'");
    if (job.phase == Phase::completed || job.phase == Phase::cancelled) return;

    if (job.phase == Phase::pending) {
        // Drop any claim it holds; warned victims get a reprieve.
        claims_.erase(std::remove_if(claims_.begin(), claims_.end(),
                                     [&](const Claim& c) { return c.claimer == job_id; }),
                      claims_.end());
    } else if (job.phase == Phase::running) {
        for (auto& claim : claims_) {
            auto& v = claim.victims;
            v.erase(std::remove(v.begin(), v.end(), job_id), v.end());
        }
        release_nodes(job);
        job.ended_at = now;
    }
    job.phase = Phase::cancelled;
    Action a{Action::Type::Cancel, now, job_id, job.spec.nodes_requested, ""};
    log_.push_back(a);
}

std::string Scheduler::add_reservation(ReservationWindow window, bool admin) {
    if (!admin) throw Error(Errc::FORBIDDEN, "reservations require an admin token");
    if (window.start >= window.end) throw Error(Errc::INVALID_WINDOW, "start must precede end");
    if (!tiers().count(window.elevated_tier))
        throw Error(Errc::INVALID_WINDOW, "unknown tier '" + window.elevated_tier + "'");
    if (window.node_cap < 1 || window.node_cap > cfg_.node_count)
        throw Error(Errc::INVALID_WINDOW, "node_cap must be within the cluster size");
    if (window.window_id.empty()) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "w-%04lld", (long long)++window_seq_);
        window.window_id = buf;
    }
    for (const auto& w : windows_)
        if (w.window_id == window.window_id)
            throw Error(Errc::INVALID_WINDOW, "duplicate window_id '" + window.window_id + "'");
    windows_.push_back(window);
    return windows_.back().window_id;
}

std::vector<Scheduler::ListedWindow> Scheduler::list_reservations(int64_t now) const {
    std::vector<ListedWindow> out;
    long long total_cap = 0;
    for (const auto& w : windows_)
        if (w.start <= now && now < w.end) {
            out.push_back({w, false});
            total_cap += w.node_cap;
        }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.window.window_id < b.window.window_id; });
    if (out.size() > 1 && total_cap > cfg_.node_count)
        for (auto& lw : out) lw.conflict = true;
    return out;
}

const ReservationWindow* Scheduler::best_window(const std::string& project, int64_t now) const {
    const ReservationWindow* best = nullptr;
    for (const auto& w : windows_) {
        if (w.project != project || now < w.start || now >= w.end) continue;
        if (!best) {
            best = &w;
            continue;
        }
        int bp = tier_priority(best->elevated_tier), wp = tier_priority(w.elevated_tier);
        if (wp > bp || (wp == bp && w.node_cap > best->node_cap) ||
            (wp == bp && w.node_cap == best->node_cap && w.window_id < best->window_id))
            best = &w;
    }
    return best;
}

void Scheduler::refresh_running_elevation(int64_t now) {
    std::vector<Job*> running;
    for (auto& [id, job] : jobs_)
        if (job.phase == Phase::running) running.push_back(&job);
    std::sort(running.begin(), running.end(), [](const Job* a, const Job* b) {
        if (a->started_at != b->started_at) return a->started_at < b->started_at;
        return a->spec.job_id < b->spec.job_id;
    });
    std::map<std::string, int> usage;
    for (Job* job : running) {
        job->elevated = false;
        const auto* w = best_window(job->spec.project, now);
        if (!w) continue;
        if (tier_priority(w->elevated_tier) <= tier_priority(job->spec.qos_requested)) continue;
        if (usage[job->spec.project] < w->node_cap) {
            job->elevated = true;
            usage[job->spec.project] += job->spec.nodes_requested;
        }
    }
}

std::map<std::string, int> Scheduler::elevated_usage() const {
    std::map<std::string, int> usage;
    for (const auto& [id, job] : jobs_)
        if (job.phase == Phase::running && job.elevated)
            usage[job.spec.project] += job.spec.nodes_requested;
    return usage;
}

std::string Scheduler::effective_tier_of(const Job& job, int64_t now,
                                         const std::map<std::string, int>& usage) const {
    const auto* w = best_window(job.spec.project, now);
    if (!w) return job.spec.qos_requested;
    if (tier_priority(w->elevated_tier) <= tier_priority(job.spec.qos_requested))
        return job.spec.qos_requested;
    if (job.phase == Phase::running)
        return job.elevated ? w->elevated_tier : job.spec.qos_requested;
    auto it = usage.find(job.spec.project);
    int used = it == usage.end() ? 0 : it->second;
    return used < w->node_cap ? w->elevated_tier : job.spec.qos_requested;
}

std::pair<std::string, int> Scheduler::effective_priority(const std::string& job_id,
                                                          int64_t now) const {
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(Errc::UNKNOWN_JOB, "no job '" + job_id + "'");
    const Job& target = it->second;

    // Fresh, deterministic elevation accounting for `now`.
    std::vector<const Job*> running;
    for (const auto& [id, job] : jobs_)
        if (job.phase == Phase::running) running.push_back(&job);
    std::sort(running.begin(), running.end(), [](const Job* a, const Job* b) {
        if (a->started_at != b->started_at) return a->started_at < b->started_at;
        return a->spec.job_id < b->spec.job_id;
    });
    std::map<std::string, int> usage;
    bool target_elevated = false;
    for (const Job* job : running) {
        const auto* w = best_window(job->spec.project, now);
        if (!w || tier_priority(w->elevated_tier) <= tier_priority(job->spec.qos_requested))
            continue;
        if (usage[job->spec.project] < w->node_cap) {
            usage[job->spec.project] += job->spec.nodes_requested;
            if (job == &target) target_elevated = true;
        }
    }

    const auto* w = best_window(target.spec.project, now);
    std::string tier = target.spec.qos_requested;
    if (w && tier_priority(w->elevated_tier) > tier_priority(tier)) {
        if (target.phase == Phase::running) {
            if (target_elevated) tier = w->elevated_tier;
        } else {
            auto it2 = usage.find(target.spec.project);
            int used = it2 == usage.end() ? 0 : it2->second;
            if (used < w->node_cap) tier = w->elevated_tier;
        }
    }
    return {tier, tier_priority(tier)};
}

bool Scheduler::node_eligible(int node, const Job& job, int64_t now) const {
    for (const auto& hr : cfg_.hard_reservations) {
        if (node >= hr.node_count) continue;
        if (job.spec.project == hr.project) continue;
        bool overlaps = now < hr.end && now + job.spec.walltime_seconds > hr.start;
        if (overlaps) return false;
    }
    return true;
}

std::vector<int> Scheduler::eligible_free_nodes(const Job& job, int64_t now) const {
    std::vector<bool> earmarked(nodes_.size(), false);
    for (const auto& claim : claims_)
        for (int n : claim.earmarked) earmarked[size_t(n)] = true;
    std::vector<int> out;
    for (int n = 0; n < int(nodes_.size()); ++n)
        if (nodes_[size_t(n)].empty() && !earmarked[size_t(n)] && node_eligible(n, job, now))
            out.push_back(n);
    return out;
}

bool Scheduler::deps_satisfied(const Job& job) const {
    for (const auto& dep : job.spec.depends_on) {
        auto it = jobs_.find(dep);
        if (it == jobs_.end() || it->second.phase != Phase::completed) return false;
    }
    return true;
}

bool Scheduler::has_claim(const std::string& job_id) const {
    for (const auto& c : claims_)
        if (c.claimer == job_id) return true;
    return false;
}

bool Scheduler::is_claim_victim(const std::string& job_id) const {
    for (const auto& c : claims_)
        for (const auto& v : c.victims)
            if (v == job_id) return true;
    return false;
}

void Scheduler::emit(std::vector<Action>& out, Action::Type type, int64_t t, const Job& job,
                     std::string detail) {
    out.push_back({type, t, job.spec.job_id, job.spec.nodes_requested, std::move(detail)});
}

void Scheduler::release_nodes(Job& job) {
    for (int n : job.assigned_nodes) nodes_[size_t(n)] = "";
    job.assigned_nodes.clear();
}

void Scheduler::assign_nodes(Job& job, const std::vector<int>& nodes) {
    job.assigned_nodes = nodes;
    for (int n : nodes) nodes_[size_t(n)] = job.spec.job_id;
}

void Scheduler::process_completions(int64_t now, std::vector<Action>& out) {
    for (auto& [id, job] : jobs_) {
        if (job.phase != Phase::running) continue;
        if (job.started_at + job.spec.walltime_seconds > now) continue;
        release_nodes(job);
        job.phase = Phase::completed;
        job.ended_at = job.started_at + job.spec.walltime_seconds;
        job.elevated = false;
        for (auto& claim : claims_) {
            auto& v = claim.victims;
            v.erase(std::remove(v.begin(), v.end(), id), v.end());
        }
        emit(out, Action::Type::Complete, now, job);
    }
}

void Scheduler::process_due_claims(int64_t now, std::vector<Action>& out) {
    std::vector<Claim> due, keep;
    for (auto& c : claims_) (c.kill_at <= now ? due : keep).push_back(c);
    claims_ = std::move(keep);

    for (auto& claim : due) {
        auto cit = jobs_.find(claim.claimer);
        bool claimer_live = cit != jobs_.end() && cit->second.phase == Phase::pending;
        if (!claimer_live) continue;  // earmark dissolves; victims keep running

        for (const auto& victim_id : claim.victims) {
            auto vit = jobs_.find(victim_id);
            if (vit == jobs_.end() || vit->second.phase != Phase::running) continue;
            Job& victim = vit->second;
            double lost = double(victim.spec.nodes_requested) * double(now - victim.started_at);
            lost_node_seconds_ += lost;
            ++kill_count_;
            emit(out, Action::Type::Kill, now, victim, "by=" + claim.claimer);
            release_nodes(victim);
            victim.phase = Phase::preempted;
            victim.started_at = -1;
            victim.elevated = false;
            ++victim.preempt_count;
            // restart-from-scratch requeue
            victim.phase = Phase::pending;
            emit(out, Action::Type::Requeue, now, victim);
        }

        Job& claimer = cit->second;
        std::sort(claim.earmarked.begin(), claim.earmarked.end());
        std::vector<int> take;
        for (int n : claim.earmarked) {
            if (int(take.size()) == claimer.spec.nodes_requested) break;
            if (nodes_[size_t(n)].empty()) take.push_back(n);
        }
        if (int(take.size()) < claimer.spec.nodes_requested) continue;  // defensive; stays pending
        assign_nodes(claimer, take);
        claimer.phase = Phase::running;
        claimer.started_at = now;
        if (claimer.first_started_at < 0) claimer.first_started_at = now;
        auto usage = elevated_usage();
        std::string tier = effective_tier_of(claimer, now, usage);
        claimer.elevated = tier != claimer.spec.qos_requested;
        emit(out, Action::Type::Start, now, claimer);
    }
}

void Scheduler::place_pending(int64_t now, std::vector<Action>& out) {
    auto usage_snapshot = elevated_usage();
    struct Entry {
        Job* job;
        int priority;
    };
    std::vector<Entry> pend;
    for (auto& [id, job] : jobs_) {
        if (job.phase != Phase::pending || job.submit_time > now || has_claim(id) ||
            !deps_satisfied(job))
            continue;
        pend.push_back({&job, tier_priority(effective_tier_of(job, now, usage_snapshot))});
    }
    std::sort(pend.begin(), pend.end(), [](const Entry& a, const Entry& b) {
        if (a.priority != b.priority) return a.priority > b.priority;
        if (a.job->submit_time != b.job->submit_time) return a.job->submit_time < b.job->submit_time;
        return a.job->spec.job_id < b.job->spec.job_id;
    });

    for (auto& entry : pend) {
        Job& job = *entry.job;
        auto free = eligible_free_nodes(job, now);
        if (int(free.size()) >= job.spec.nodes_requested) {
            free.resize(size_t(job.spec.nodes_requested));
            assign_nodes(job, free);
            job.phase = Phase::running;
            job.started_at = now;
            if (job.first_started_at < 0) job.first_started_at = now;
            auto usage = elevated_usage();
            std::string tier = effective_tier_of(job, now, usage);
            job.elevated = tier != job.spec.qos_requested;
            emit(out, Action::Type::Start, now, job);
            continue;
        }

        // Not placeable on free nodes: try preemption.
        auto usage = elevated_usage();
        std::string tier = effective_tier_of(job, now, usage);
        const auto& mp = tiers().at(tier).may_preempt;
        if (mp.empty()) continue;

        std::vector<VictimCandidate> candidates;
        for (auto& [vid, victim] : jobs_) {
            if (victim.phase != Phase::running || is_claim_victim(vid)) continue;
            std::string vtier = effective_tier_of(victim, now, usage);
            if (!mp.count(vtier)) continue;
            bool usable = true;
            for (int n : victim.assigned_nodes)
                if (!node_eligible(n, job, now)) usable = false;
            if (!usable) continue;
            candidates.push_back({vid, victim.spec.nodes_requested, now - victim.started_at,
                                  tier_priority(vtier)});
        }
        auto sel = select_victims(job.spec.nodes_requested, int(free.size()), candidates);
        if (sel.empty()) continue;

        Claim claim;
        claim.claimer = job.spec.job_id;
        claim.kill_at = now + cfg_.grace_seconds;
        claim.victims = sel;
        int victim_nodes = 0;
        for (const auto& vid : sel) {
            const Job& victim = jobs_.at(vid);
            victim_nodes += victim.spec.nodes_requested;
            for (int n : victim.assigned_nodes) claim.earmarked.push_back(n);
            emit(out, Action::Type::PreemptWarn, now, victim,
                 "by=" + job.spec.job_id + " requester_tier=" + tier + " victim_tier=" +
                     effective_tier_of(victim, now, usage));
        }
        int still_needed = job.spec.nodes_requested - victim_nodes;
        for (int i = 0; i < still_needed && i < int(free.size()); ++i)
            claim.earmarked.push_back(free[size_t(i)]);
        claims_.push_back(std::move(claim));
    }
}

std::vector<Action> Scheduler::schedule_step(int64_t now) {
    if (now <= last_step_)
        throw Error(Errc::INVALID_ARGUMENT, "schedule_step times must strictly increase");
    if (first_step_ < 0) {
        first_step_ = now;
    } else {
        int busy = 0;
        for (const auto& occ : nodes_)
            if (!occ.empty()) ++busy;
        busy_node_seconds_ += double(busy) * double(now - last_step_);
    }
    last_step_ = now;

    std::vector<Action> out;
    process_completions(now, out);
    refresh_running_elevation(now);
    process_due_claims(now, out);
    place_pending(now, out);
    log_.insert(log_.end(), out.begin(), out.end());
    return out;
}

void Scheduler::run_until(int64_t now) {
    for (int64_t t = last_step_ < 0 ? 0 : last_step_ + 1; t <= now; ++t) schedule_step(t);
}

Metrics Scheduler::metrics(int64_t now) const {
    Metrics m;
    if (first_step_ < 0 || now <= first_step_) return m;
    double busy = busy_node_seconds_;
    if (now > last_step_) {
        int occupied = 0;
        for (const auto& occ : nodes_)
            if (!occ.empty()) ++occupied;
        busy += double(occupied) * double(now - last_step_);
    }
    double denom = double(cfg_.node_count) * double(now - first_step_);
    m.utilization_busy = busy / denom;
    m.utilization_useful = (busy - lost_node_seconds_) / denom;
    m.preemption_count = kill_count_;
    m.lost_node_seconds = lost_node_seconds_;

    std::map<std::string, std::pair<double, int>> wait;
    for (const auto& [id, job] : jobs_) {
        if (job.first_started_at < 0) continue;
        auto& slot = wait[job.spec.qos_requested];
        slot.first += double(job.first_started_at - job.submit_time);
        slot.second += 1;
    }
    for (const auto& [tier, acc] : wait) m.mean_wait_by_tier[tier] = acc.first / acc.second;
    return m;
}

const Job* Scheduler::find_job(const std::string& job_id) const {
    auto it = jobs_.find(job_id);
    return it == jobs_.end() ? nullptr : &it->second;
}

std::vector<std::string> Scheduler::check_invariants() const {
    std::vector<std::string> bad;
    std::map<std::string, int> seen;  // job_id -> occupied node count
    for (int n = 0; n < int(nodes_.size()); ++n) {
        const auto& occ = nodes_[size_t(n)];
        if (occ.empty()) continue;
        auto it = jobs_.find(occ);
        if (it == jobs_.end()) {
            bad.push_back("node " + std::to_string(n) + " assigned to unknown job " + occ);
            continue;
        }
        if (it->second.phase != Phase::running)
            bad.push_back("node " + std::to_string(n) + " held by non-running job " + occ);
        ++seen[occ];
    }
    for (const auto& [id, job] : jobs_) {
        if (job.phase == Phase::running) {
            if (int(job.assigned_nodes.size()) != job.spec.nodes_requested)
                bad.push_back("running job " + id + " holds " +
                              std::to_string(job.assigned_nodes.size()) + " nodes, wants " +
                              std::to_string(job.spec.nodes_requested));
            if (seen[id] != int(job.assigned_nodes.size()))
                bad.push_back("occupancy mismatch for " + id);
            for (int n : job.assigned_nodes)
                if (nodes_[size_t(n)] != id) bad.push_back("node table disagrees for " + id);
        } else if (!job.assigned_nodes.empty()) {
            bad.push_back(std::string(phase_name(job.phase)) + " job " + id + " still holds nodes");
        }
    }
    std::set<int> marked;
    for (const auto& claim : claims_)
        for (int n : claim.earmarked)
            if (!marked.insert(n).second)
                bad.push_back("node " + std::to_string(n) + " earmarked twice");
    return bad;
}

}  // namespace scimesh::sched
