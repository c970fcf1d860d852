#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scimesh::sched {

struct TierInfo {
    std::string name;
    int priority = 0;
    std::set<std::string> may_preempt;
};

/// batch < interactive < urgent.
const std::map<std::string, TierInfo>& tiers();
int tier_priority(const std::string& name);        // throws INVALID_ARGUMENT
bool tier_may_preempt(const std::string& requester, const std::string& victim);

struct JobSpec {
    std::string job_id;  // assigned by the scheduler when empty
    std::string project;
    std::string subject;
    int nodes_requested = 1;
    int64_t walltime_seconds = 1;
    std::string qos_requested = "batch";
    std::set<std::string> depends_on;
};

enum class Phase { pending, running, preempted, completed, cancelled };
const char* phase_name(Phase p);

struct Job {
    JobSpec spec;
    Phase phase = Phase::pending;
    std::vector<int> assigned_nodes;
    int64_t submit_time = 0;
    int64_t started_at = -1;        // current run
    int64_t first_started_at = -1;  // wait-time metric uses the first start
    int64_t ended_at = -1;
    int preempt_count = 0;
    bool elevated = false;  // holds a reservation-window elevation right now
};

struct ReservationWindow {
    std::string window_id;  // assigned when empty
    std::string project;
    int64_t start = 0;  // [start, end)
    int64_t end = 0;
    std::string elevated_tier = "urgent";
    int node_cap = 0;
};

/// Baseline-style physical reservation: nodes [0, node_count) belong to
/// `project` for any job whose run would overlap [start, end).
struct HardReservation {
    std::string project;
    int64_t start = 0;
    int64_t end = 0;
    int node_count = 0;
};

struct Action {
    enum class Type { Start, PreemptWarn, Kill, Requeue, Complete, Cancel };
    Type type;
    int64_t t = 0;
    std::string job_id;
    int nodes = 0;
    std::string detail;  // e.g. the claiming job for a warn/kill

    bool operator==(const Action&) const = default;
};
const char* action_name(Action::Type t);

struct Metrics {
    double utilization_busy = 0.0;
    double utilization_useful = 0.0;
    std::map<std::string, double> mean_wait_by_tier;  // keyed by requested tier
    int64_t preemption_count = 0;
    double lost_node_seconds = 0.0;
};

struct SchedulerConfig {
    int node_count = 8;
    int64_t grace_seconds = 30;
    std::map<std::string, std::set<std::string>> entitlements;  // project -> tiers
    std::set<std::string> default_entitlement{"batch"};
    std::vector<HardReservation> hard_reservations;
};

/// A single preemption candidate as seen by select_victims.
struct VictimCandidate {
    std::string job_id;
    int nodes = 0;
    int64_t elapsed_seconds = 0;  // runtime so far; lost work if killed now
    int priority = 0;             // current effective priority
};

/// Minimizes (victim count, lost node-seconds, summed priority, sorted ids)
/// among subsets that free at least `needed_nodes` together with
/// `free_nodes`. Empty result when free nodes already suffice or nothing
/// does. Pure.
std::vector<std::string> select_victims(int needed_nodes, int free_nodes,
                                        const std::vector<VictimCandidate>& candidates);

/// Discrete-time cluster scheduler. Single-threaded; callers serialize.
class Scheduler {
  public:
    explicit Scheduler(SchedulerConfig cfg);

    /// Throws PROJECT_MISMATCH, QOS_NOT_ENTITLED, NODES_EXCEED_CLUSTER,
    /// DEPENDENCY_UNKNOWN, INVALID_ARGUMENT.
    std::string submit_job(JobSpec spec, const std::string& claim_project, int64_t now);

    /// Validates the whole batch (CYCLE_DETECTED, DEPENDENCY_UNKNOWN, plus
    /// submit_job errors) before registering any of it.
    std::vector<std::string> submit_workflow(std::vector<JobSpec> specs,
                                             const std::string& claim_project, int64_t now);

    /// Throws UNKNOWN_JOB, PROJECT_MISMATCH.
    void cancel_job(const std::string& job_id, const std::string& claim_project, bool admin,
                    int64_t now);

    /// Throws FORBIDDEN (non-admin), INVALID_WINDOW.
    std::string add_reservation(ReservationWindow window, bool admin);

    struct ListedWindow {
        ReservationWindow window;
        bool conflict = false;  // overlaps others such that caps exceed the cluster
    };
    std::vector<ListedWindow> list_reservations(int64_t now) const;

    /// (tier name, priority) after reservation-window elevation.
    std::pair<std::string, int> effective_priority(const std::string& job_id, int64_t now) const;

    /// Advances one tick. `now` must be strictly greater than the last call's.
    std::vector<Action> schedule_step(int64_t now);

    /// Runs schedule_step once per second through `now` inclusive.
    void run_until(int64_t now);

    Metrics metrics(int64_t now) const;

    const Job* find_job(const std::string& job_id) const;
    const std::map<std::string, Job>& jobs() const { return jobs_; }
    const std::vector<Action>& action_log() const { return log_; }
    int node_count() const { return cfg_.node_count; }
    int64_t grace_seconds() const { return cfg_.grace_seconds; }
    const std::vector<std::string>& node_occupancy() const { return nodes_; }

    /// Violated-invariant descriptions; empty when consistent.
    std::vector<std::string> check_invariants() const;

  private:
    struct Claim {
        std::string claimer;
        int64_t kill_at = 0;
        std::vector<std::string> victims;  // not yet killed/completed/cancelled
        std::vector<int> earmarked;        // nodes held for the claimer
    };

    void validate_spec(const JobSpec& spec, const std::string& claim_project) const;
    std::string next_job_id();
    const std::set<std::string>& entitled_tiers(const std::string& project) const;

    // Reservation-window elevation, recomputed each step.
    const ReservationWindow* best_window(const std::string& project, int64_t now) const;
    void refresh_running_elevation(int64_t now);
    std::map<std::string, int> elevated_usage() const;  // project -> nodes
    std::string effective_tier_of(const Job& job, int64_t now,
                                  const std::map<std::string, int>& usage) const;

    bool node_eligible(int node, const Job& job, int64_t now) const;
    std::vector<int> eligible_free_nodes(const Job& job, int64_t now) const;
    bool deps_satisfied(const Job& job) const;
    bool has_claim(const std::string& job_id) const;
    bool is_claim_victim(const std::string& job_id) const;

    void emit(std::vector<Action>& out, Action::Type type, int64_t t, const Job& job,
              std::string detail = "");
    void release_nodes(Job& job);
    void assign_nodes(Job& job, const std::vector<int>& nodes);

    void process_completions(int64_t now, std::vector<Action>& out);
    void process_due_claims(int64_t now, std::vector<Action>& out);
    void place_pending(int64_t now, std::vector<Action>& out);

    SchedulerConfig cfg_;
    std::vector<std::string> nodes_;  // occupancy: job_id or ""
    std::map<std::string, Job> jobs_;
    std::vector<ReservationWindow> windows_;
    std::vector<Claim> claims_;
    std::vector<Action> log_;
    int64_t job_seq_ = 0;
    int64_t window_seq_ = 0;
    int64_t last_step_ = -1;
    int64_t first_step_ = -1;
    double busy_node_seconds_ = 0.0;
    double lost_node_seconds_ = 0.0;
    int64_t kill_count_ = 0;
};

}  // namespace scimesh::sched
