#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "scimesh/auth/tokens.hpp"
#include "scimesh/clock.hpp"
#include "scimesh/dsn/broker.hpp"
#include "scimesh/dsn/node.hpp"
#include "scimesh/gateway/audit.hpp"
#include "scimesh/gateway/config.hpp"
#include "scimesh/gateway/ratelimit.hpp"
#include "scimesh/gateway/routes.hpp"
#include "scimesh/policy/engine.hpp"
#include "scimesh/profiles/profiles.hpp"
#include "scimesh/sched/scheduler.hpp"

namespace scimesh::gateway {

struct RequestContext {
    std::string request_id;  // 32 hex chars; filled in when empty
    std::string method;
    std::string path;
    std::string bearer;  // raw token from the Authorization header
    std::string body;
    std::string source_ip;
    int64_t received_at = 0;  // unix millis; filled in when 0
    std::map<std::string, std::string> query;
};

struct Response {
    int status = 0;
    nlohmann::json body;
};

/// HTTP status a backend-raised error maps to. Authentication failures are
/// always 401 regardless of this table (the pipeline hardcodes stage 1).
int http_status_for(Errc code);

/// The request front door: owns the token authority, policy set, rate
/// buckets, audit sink, scheduler, and stream broker, and runs every request
/// through the fixed authenticate -> authorize -> rate-limit -> route
/// pipeline with exactly one audit record per request.
///
/// handle_request is fully concurrent; the scheduler is serialized behind
/// with_scheduler, and the policy/profile pair swaps atomically on reload.
class Gateway {
  public:
    /// `base` keeps its values as upper bounds; the named profile tightens
    /// them into the effective config. id_seed 0 draws from entropy;
    /// anything else makes token and request ids reproducible.
    Gateway(Config base, Clock& clock, uint64_t id_seed = 0);

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Runs the pipeline. Never throws: every outcome is a Response, and
    /// every call appends exactly one audit record (or degrades to 503 when
    /// the store is down).
    Response handle_request(RequestContext ctx);

    /// Fresh context with a unique request id and the current receive time.
    RequestContext make_context(std::string method, std::string path, std::string bearer,
                                std::string body, std::string source_ip);

    /// Issues a token directly against the authority (no HTTP, no policy) —
    /// the way a deployment gets its first admin credential. Profile limits
    /// still apply.
    std::string issue_token(const std::string& subject, const std::string& project,
                            const std::set<std::string>& scopes, int64_t ttl_seconds,
                            bool mfa = true, int max_enclave = 3);

    /// Parses and atomically swaps in a new policy set. Throws PARSE_ERROR,
    /// DUPLICATE_RULE_ID, INVALID_CONDITION.
    void load_policies_text(const std::string& document_text);

    /// Atomically re-derives the effective config from the named profile.
    /// Throws UNKNOWN_PROFILE. Already-issued tokens keep their claims.
    void set_profile_name(const std::string& name);

    Config effective_config() const;
    profiles::EnvironmentProfile profile() const;
    std::shared_ptr<const policy::PolicySet> policies() const;

    auth::TokenAuthority& tokens() { return authority_; }
    dsn::Broker& broker() { return broker_; }
    dsn::StreamNode& stream_node() { return node_; }
    AuditStore& audit() { return audit_; }
    BucketStore& buckets() { return buckets_; }
    Clock& clock() { return clock_; }
    int64_t requests_total() const { return requests_total_.load(); }

    /// Serialized access to the scheduler (it is single-threaded by
    /// contract). All gateway handlers go through here too.
    template <typename F>
    auto with_scheduler(F&& f) {
        std::lock_guard<std::mutex> lk(sched_mu_);
        return f(sched_);
    }

    /// Advances the scheduler to `now`; call from inside with_scheduler.
    /// The first call anchors the timeline with a single step (wall-clock
    /// epochs would otherwise mean billions of catch-up ticks); later calls
    /// step through every second.
    void pump_scheduler(sched::Scheduler& s, int64_t now);

  private:
    struct State {
        Config cfg;  // after apply_profile
        profiles::EnvironmentProfile profile;
        std::shared_ptr<const policy::PolicySet> policies;
    };

    /// Pipeline rejection: HTTP status plus the stable error it reports.
    struct Reject {
        int status;
        Errc code;
        std::string detail;
    };

    std::shared_ptr<const State> state() const;
    std::string next_request_id();
    static bool is_admin(const auth::Claims& claims);

    Response dispatch(const RequestContext& ctx, const RouteMatch& route,
                      const auth::Claims& claims, const State& st);
    Response handle_status(const State& st);
    Response handle_scheduler(const RequestContext& ctx, const RouteMatch& route,
                              const auth::Claims& claims);
    Response handle_dsn(const RequestContext& ctx, const RouteMatch& route,
                        const auth::Claims& claims, const State& st);
    Response handle_admin(const RequestContext& ctx, const RouteMatch& route,
                          const auth::Claims& claims, const State& st);
    Response handle_reservations(const RequestContext& ctx, const RouteMatch& route,
                                 const State& st);
    Response handle_metrics();

    Clock& clock_;
    Config base_cfg_;
    std::vector<profiles::EnvironmentProfile> table_;
    auth::TokenAuthority authority_;
    BucketStore buckets_;
    AuditStore audit_;
    RouteTable routes_;
    sched::Scheduler sched_;
    std::mutex sched_mu_;
    bool sched_primed_ = false;  // guarded by sched_mu_
    dsn::Broker broker_;
    dsn::StreamNode node_;

    mutable std::mutex state_mu_;
    std::shared_ptr<const State> state_;

    std::mutex id_mu_;
    util::IdGen reqids_;

    std::mutex resv_mu_;
    int64_t resv_seq_ = 0;
    std::map<std::string, sched::ReservationWindow> pending_resv_;

    std::atomic<int64_t> requests_total_{0};
};

/// httplib wrapper: binds, serves, and feeds every request through
/// Gateway::handle_request. JSON in, JSON out.
class GatewayServer {
  public:
    explicit GatewayServer(Gateway& gw);
    ~GatewayServer();

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    /// Binds (port 0 = ephemeral) and starts serving on a background
    /// thread. Returns the bound port. Throws IO_ERROR.
    uint16_t start(const std::string& address, int port);

    void stop();
    uint16_t port() const { return port_; }

  private:
    struct Impl;  // keeps httplib out of this header

    Gateway& gw_;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    uint16_t port_ = 0;
};

}  // namespace scimesh::gateway
