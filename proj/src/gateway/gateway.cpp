#include "scimesh/gateway/gateway.hpp"

#include <cstdio>
#include <random>
#include <utility>

#include <httplib.h>

#include "scimesh/errors.hpp"
#include "scimesh/util.hpp"

using nlohmann::json;

namespace scimesh::gateway {

namespace {

uint64_t sub_seed(uint64_t seed, uint64_t salt) {
    if (seed == 0) {
        std::random_device rd;
        return (uint64_t(rd()) << 32) ^ rd();
    }
    return seed * 0x9e3779b97f4a7c15ULL + salt;
}

std::string effective_secret(const Config& cfg) {
    if (!cfg.secret.empty()) return cfg.secret;
    util::IdGen g;
    return g.next_hex() + g.next_hex();
}

std::vector<profiles::EnvironmentProfile> build_table(const Config& cfg) {
    auto table = profiles::default_table();
    if (!cfg.profile_override_path.empty())
        table = profiles::apply_overrides(std::move(table),
                                          util::read_file(cfg.profile_override_path));
    return table;
}

sched::SchedulerConfig to_sched_config(const ClusterConfig& cl) {
    sched::SchedulerConfig sc;
    sc.node_count = cl.node_count;
    sc.grace_seconds = cl.grace_seconds;
    for (const auto& [project, tiers] : cl.entitlements)
        sc.entitlements[project] = std::set<std::string>(tiers.begin(), tiers.end());
    return sc;
}

json parse_body(const RequestContext& ctx) {
    if (ctx.body.empty()) return json::object();
    try {
        return json::parse(ctx.body);
    } catch (const json::exception& e) {
        throw Error(Errc::MALFORMED, std::string("request body: ") + e.what());
    }
}

int64_t parse_int64(const std::string& text, const char* what) {
    try {
        size_t pos = 0;
        int64_t v = std::stoll(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::MALFORMED, std::string(what) + " is not an integer: " + text);
    }
}

std::set<std::string> scope_set(const json& arr) {
    std::set<std::string> scopes;
    for (const auto& s : arr) scopes.insert(s.get<std::string>());
    return scopes;
}

sched::JobSpec job_spec_from(const json& j, const auth::Claims& claims) {
    sched::JobSpec spec;
    spec.job_id = j.value("job_id", std::string());
    spec.project = j.value("project", claims.project);
    spec.subject = claims.subject;
    spec.nodes_requested = j.value("nodes", 1);
    spec.walltime_seconds = j.value("walltime_seconds", int64_t{1});
    spec.qos_requested = j.value("qos", std::string("batch"));
    if (j.contains("depends_on"))
        for (const auto& d : j["depends_on"]) spec.depends_on.insert(d.get<std::string>());
    return spec;
}

json job_json(const sched::Job& job) {
    return json{{"job_id", job.spec.job_id},
                {"project", job.spec.project},
                {"subject", job.spec.subject},
                {"nodes", job.spec.nodes_requested},
                {"walltime_seconds", job.spec.walltime_seconds},
                {"qos", job.spec.qos_requested},
                {"depends_on", std::vector<std::string>(job.spec.depends_on.begin(),
                                                        job.spec.depends_on.end())},
                {"phase", sched::phase_name(job.phase)},
                {"assigned_nodes", job.assigned_nodes},
                {"submit_time", job.submit_time},
                {"started_at", job.started_at},
                {"first_started_at", job.first_started_at},
                {"ended_at", job.ended_at},
                {"preempt_count", job.preempt_count},
                {"elevated", job.elevated}};
}

json window_json(const sched::ReservationWindow& w) {
    return json{{"window_id", w.window_id}, {"project", w.project},
                {"start", w.start},         {"end", w.end},
                {"elevated_tier", w.elevated_tier}, {"node_cap", w.node_cap}};
}

json counters_json(const dsn::ChannelCounters& c) {
    return json{{"bytes_in", c.bytes_in},
                {"bytes_out", c.bytes_out},
                {"messages", c.messages},
                {"drops", c.drops}};
}

uint32_t parse_channel_id(const std::string& text) {
    try {
        size_t pos = 0;
        unsigned long v = std::stoul(text, &pos);
        if (pos != text.size() || v > 0xffffffffUL) throw std::invalid_argument(text);
        return uint32_t(v);
    } catch (const std::exception&) {
        throw Error(Errc::UNKNOWN_CHANNEL, text);
    }
}

bool mode_allowed(const std::vector<std::string>& allowed, const std::string& mode) {
    for (const auto& m : allowed)
        if (m == mode) return true;
    return false;
}

}  // namespace

int http_status_for(Errc code) {
    switch (code) {
        case Errc::EXPIRED:
        case Errc::BAD_SIGNATURE:
        case Errc::REVOKED:
        case Errc::AUTH_REQUIRED:
            return 401;
        case Errc::FORBIDDEN:
        case Errc::PROJECT_MISMATCH:
        case Errc::MODE_NOT_ALLOWED:
        case Errc::TARGET_NOT_ALLOWED:
        case Errc::CIDR_REJECTED:
        case Errc::SCOPE_ESCALATION:
        case Errc::TTL_ESCALATION:
        case Errc::DEPTH_EXCEEDED:
        case Errc::MFA_REQUIRED:
        case Errc::QOS_NOT_ENTITLED:
            return 403;
        case Errc::NOT_FOUND:
        case Errc::UNKNOWN_JOB:
        case Errc::UNKNOWN_CHANNEL:
        case Errc::UNKNOWN_TOKEN:
            return 404;
        case Errc::CHANNEL_CLOSED:
            return 409;
        case Errc::MESSAGE_TOO_LARGE:
            return 413;
        case Errc::RATE_LIMITED:
            return 429;
        case Errc::STORE_UNAVAILABLE:
            return 503;
        case Errc::BACKEND_FAILURE:
        case Errc::IO_ERROR:
            return 502;
        default:
            return 400;
    }
}

Gateway::Gateway(Config base, Clock& clock, uint64_t id_seed)
    : clock_(clock),
      base_cfg_(std::move(base)),
      table_(build_table(base_cfg_)),
      authority_(effective_secret(base_cfg_), auth::IssueLimits{}, sub_seed(id_seed, 1)),
      buckets_(base_cfg_.rate_limits),
      audit_(base_cfg_.audit_path),
      routes_(RouteTable::defaults()),
      sched_(to_sched_config(base_cfg_.cluster)),
      broker_(clock),
      node_(broker_, dsn::make_token_authenticator(authority_, clock)),
      reqids_(sub_seed(id_seed, 2)) {
    set_profile_name(base_cfg_.profile);
    if (!base_cfg_.policy_path.empty())
        load_policies_text(util::read_file(base_cfg_.policy_path));
    if (!base_cfg_.templates_path.empty())
        broker_.load_templates_json(util::read_file(base_cfg_.templates_path));
    if (!base_cfg_.token_journal_path.empty())
        authority_.attach_journal(base_cfg_.token_journal_path);
}

auto Gateway::state() const -> std::shared_ptr<const State> {
    std::lock_guard lk(state_mu_);
    return state_;
}

std::string Gateway::next_request_id() {
    std::lock_guard lk(id_mu_);
    return reqids_.next_hex();
}

bool Gateway::is_admin(const auth::Claims& claims) { return claims.scopes.count("admin.*") > 0; }

void Gateway::pump_scheduler(sched::Scheduler& s, int64_t now) {
    if (!sched_primed_) {
        s.schedule_step(now);
        sched_primed_ = true;
        return;
    }
    s.run_until(now);
}

void Gateway::set_profile_name(const std::string& name) {
    const auto& prof = profiles::find_profile(table_, name);
    auto cfg = profiles::apply_profile(prof, base_cfg_);
    authority_.set_limits(
        {cfg.max_token_ttl_seconds, cfg.mfa_required, cfg.max_delegation_depth});
    std::lock_guard lk(state_mu_);
    auto policies = state_ ? state_->policies : std::make_shared<const policy::PolicySet>();
    state_ = std::make_shared<const State>(State{std::move(cfg), prof, std::move(policies)});
}

void Gateway::load_policies_text(const std::string& document_text) {
    auto set = std::make_shared<const policy::PolicySet>(policy::PolicySet::load(document_text));
    std::lock_guard lk(state_mu_);
    state_ = std::make_shared<const State>(State{state_->cfg, state_->profile, std::move(set)});
}

Config Gateway::effective_config() const { return state()->cfg; }

profiles::EnvironmentProfile Gateway::profile() const { return state()->profile; }

std::shared_ptr<const policy::PolicySet> Gateway::policies() const { return state()->policies; }

std::string Gateway::issue_token(const std::string& subject, const std::string& project,
                                 const std::set<std::string>& scopes, int64_t ttl_seconds,
                                 bool mfa, int max_enclave) {
    return authority_.issue(subject, project, scopes, ttl_seconds, mfa, max_enclave,
                            clock_.now_seconds());
}

RequestContext Gateway::make_context(std::string method, std::string path, std::string bearer,
                                     std::string body, std::string source_ip) {
    RequestContext ctx;
    ctx.request_id = next_request_id();
    ctx.method = std::move(method);
    ctx.path = std::move(path);
    ctx.bearer = std::move(bearer);
    ctx.body = std::move(body);
    ctx.source_ip = std::move(source_ip);
    ctx.received_at = clock_.now_millis();
    return ctx;
}

Response Gateway::handle_request(RequestContext ctx) {
    requests_total_.fetch_add(1, std::memory_order_relaxed);
    if (ctx.received_at == 0) ctx.received_at = clock_.now_millis();
    if (ctx.request_id.empty()) ctx.request_id = next_request_id();
    auto st = state();

    AuditRecord rec;
    rec.ts_ms = ctx.received_at;
    rec.request_id = ctx.request_id;
    rec.resource = ctx.path;

    Response resp;
    std::string reason = "OK";
    try {
        // 1. authenticate
        auth::Claims claims;
        try {
            claims = authority_.validate(ctx.bearer, clock_.now_seconds());
        } catch (const Error& e) {
            throw Reject{401, e.code(), e.detail()};
        }
        rec.subject = claims.subject;

        // 2. authorize: resolve the action, then token scopes, enclave
        //    ceiling, and the policy set (deny-by-default).
        RouteMatch route;
        try {
            route = routes_.route(ctx.method, ctx.path);
        } catch (const Error& e) {
            throw Reject{404, e.code(), e.detail()};
        }
        rec.action = route.action;
        if (!route.scope_exempt && !auth::scopes_cover(claims.scopes, route.action))
            throw Reject{403, Errc::FORBIDDEN, "token scopes do not cover " + route.action};
        if (claims.max_enclave < st->profile.level)
            throw Reject{403, Errc::FORBIDDEN,
                         "token is limited to enclave level " +
                             std::to_string(claims.max_enclave) + " but the gateway runs at " +
                             std::to_string(st->profile.level)};
        policy::RequestCtx pctx;
        pctx.subject = claims.subject;
        pctx.project = claims.project;
        pctx.action = route.action;
        pctx.resource = ctx.path;
        pctx.now = clock_.now_seconds();
        pctx.source_ip = ctx.source_ip;
        pctx.enclave = st->profile.level;
        auto decision = policy::evaluate(*st->policies, pctx);
        if (decision.verdict != policy::Effect::allow)
            throw Reject{403, Errc::FORBIDDEN, decision.reason};

        // 3. rate limit
        if (!buckets_.check(claims.subject, route.endpoint_class, 1, clock_.now_millis()))
            throw Reject{429, Errc::RATE_LIMITED,
                         "bucket (" + claims.subject + ", " + route.endpoint_class + ") empty"};

        // 4. backend — but only with a writable audit trail (fail closed).
        if (!audit_.healthy())
            throw Reject{503, Errc::STORE_UNAVAILABLE, "audit store unavailable"};
        try {
            resp = dispatch(ctx, route, claims, *st);
        } catch (const Reject&) {
            throw;
        } catch (const Error& e) {
            throw Reject{http_status_for(e.code()), e.code(), e.detail()};
        } catch (const std::exception& e) {
            throw Reject{502, Errc::BACKEND_FAILURE, e.what()};
        }
    } catch (const Reject& r) {
        reason = std::string(errc_name(r.code));
        resp.status = r.status;
        resp.body = json{{"error", reason}, {"detail", r.detail}, {"request_id", ctx.request_id}};
    }

    rec.http_status = resp.status;
    rec.verdict = resp.status < 400 ? "allow" : "deny";
    rec.reason = resp.status < 400 ? "OK" : reason;
    rec.latency_ms = double(clock_.now_millis() - ctx.received_at);

    // 5. exactly one audit record per request, durable before the response
    //    leaves. A failed append downgrades the response to 503.
    try {
        audit_.append(rec);
    } catch (const Error& e) {
        resp.status = 503;
        resp.body = json{{"error", errc_name(Errc::STORE_UNAVAILABLE)},
                         {"detail", e.detail()},
                         {"request_id", ctx.request_id}};
    }
    return resp;
}

Response Gateway::dispatch(const RequestContext& ctx, const RouteMatch& route,
                           const auth::Claims& claims, const State& st) {
    try {
        if (route.service == "status") return handle_status(st);
        if (route.service == "scheduler") return handle_scheduler(ctx, route, claims);
        if (route.service == "dsn") return handle_dsn(ctx, route, claims, st);
        return handle_admin(ctx, route, claims, st);
    } catch (const json::exception& e) {
        throw Error(Errc::MALFORMED, std::string("request body: ") + e.what());
    }
}

Response Gateway::handle_status(const State& st) {
    int64_t now = clock_.now_seconds();
    json sched_part = with_scheduler([&](sched::Scheduler& s) {
        pump_scheduler(s, now);
        size_t running = 0;
        for (const auto& [id, job] : s.jobs())
            if (job.phase == sched::Phase::running) ++running;
        return json{{"node_count", s.node_count()},
                    {"jobs", s.jobs().size()},
                    {"jobs_running", running}};
    });
    return {200, json{{"service", "scimesh-gateway"},
                      {"profile", st.profile.name},
                      {"level", st.profile.level},
                      {"time_seconds", now},
                      {"cluster", std::move(sched_part)},
                      {"channels", broker_.list().size()}}};
}

Response Gateway::handle_scheduler(const RequestContext& ctx, const RouteMatch& route,
                                   const auth::Claims& claims) {
    int64_t now = clock_.now_seconds();
    if (route.action == "jobs.submit") {
        json body = parse_body(ctx);
        if (ctx.path == "/v1/workflows") {
            std::vector<sched::JobSpec> specs;
            for (const auto& j : body.at("jobs")) specs.push_back(job_spec_from(j, claims));
            auto ids = with_scheduler([&](sched::Scheduler& s) {
                auto out = s.submit_workflow(std::move(specs), claims.project, now);
                pump_scheduler(s, now);
                return out;
            });
            return {200, json{{"job_ids", ids}}};
        }
        auto spec = job_spec_from(body, claims);
        auto id = with_scheduler([&](sched::Scheduler& s) {
            auto out = s.submit_job(std::move(spec), claims.project, now);
            pump_scheduler(s, now);
            return out;
        });
        return {200, json{{"job_id", id}}};
    }
    const std::string& id = route.params.at("id");
    if (route.action == "jobs.read") {
        return with_scheduler([&](sched::Scheduler& s) {
            pump_scheduler(s, now);
            const auto* job = s.find_job(id);
            if (!job) throw Error(Errc::UNKNOWN_JOB, id);
            return Response{200, job_json(*job)};
        });
    }
    with_scheduler([&](sched::Scheduler& s) {
        s.cancel_job(id, claims.project, is_admin(claims), now);
        pump_scheduler(s, now);
        return 0;
    });
    return {200, json{{"job_id", id}, {"cancelled", true}}};
}

Response Gateway::handle_dsn(const RequestContext& ctx, const RouteMatch& route,
                             const auth::Claims& claims, const State& st) {
    if (ctx.method == "POST") {
        json body = parse_body(ctx);
        dsn::ProvisionRequest req;
        req.template_id = body.at("template_id").get<std::string>();
        req.internal_target = body.value("internal_target", std::string());
        if (body.contains("buffer_capacity_bytes"))
            req.buffer_capacity_bytes = body["buffer_capacity_bytes"].get<int64_t>();
        auto tmpl = broker_.get_template(req.template_id);
        std::string mode = dsn::mode_name(tmpl.mode);
        if (!mode_allowed(st.cfg.allowed_stream_modes, mode))
            throw Error(Errc::MODE_NOT_ALLOWED,
                        "profile '" + st.profile.name + "' does not allow " + mode + " channels");
        auto info = broker_.provision(req, claims.project,
                                      auth::scopes_cover(claims.scopes, "streams.provision"));
        node_.open_data_port(info.channel_id);
        return {200, broker_.info(info.channel_id).to_json()};
    }
    uint32_t id = parse_channel_id(route.params.at("id"));
    if (ctx.method == "GET") {
        auto j = broker_.info(id).to_json();
        auto tp = broker_.throughput(id, 10.0);
        j["throughput"] = json{{"window_seconds", 10.0},
                               {"bytes_per_second", tp.bytes_per_second},
                               {"messages_per_second", tp.messages_per_second}};
        return {200, std::move(j)};
    }
    auto final_counters = broker_.teardown(id, claims.project, is_admin(claims));
    return {200, json{{"channel_id", id},
                      {"state", "closed"},
                      {"counters", counters_json(final_counters)}}};
}

Response Gateway::handle_admin(const RequestContext& ctx, const RouteMatch& route,
                               const auth::Claims& claims, const State& st) {
    int64_t now = clock_.now_seconds();
    if (route.action == "tokens.delegate") {
        json body = parse_body(ctx);
        auto token = authority_.delegate(ctx.bearer, scope_set(body.at("scopes")),
                                         body.at("ttl_seconds").get<int64_t>(), now);
        auto c = authority_.decode_verified(token);
        return {200,
                json{{"token", token}, {"token_id", c.token_id}, {"expires_at", c.expires_at}}};
    }
    if (route.action == "admin.tokens") {
        if (ctx.method == "DELETE") {
            size_t n = authority_.revoke(route.params.at("id"));
            return {200, json{{"revoked", n}}};
        }
        json body = parse_body(ctx);
        auto token = authority_.issue(body.at("subject").get<std::string>(),
                                      body.at("project").get<std::string>(),
                                      scope_set(body.at("scopes")),
                                      body.at("ttl_seconds").get<int64_t>(),
                                      body.value("mfa", false), body.value("max_enclave", 3), now);
        auto c = authority_.decode_verified(token);
        return {200,
                json{{"token", token}, {"token_id", c.token_id}, {"expires_at", c.expires_at}}};
    }
    if (route.action == "admin.policies") {
        load_policies_text(ctx.body);
        return {200, json{{"rules", policies()->size()}}};
    }
    if (route.action == "admin.reservations") return handle_reservations(ctx, route, st);
    if (route.action == "admin.audit") {
        AuditFilter f;
        if (ctx.query.count("subject")) f.subject = ctx.query.at("subject");
        if (ctx.query.count("verdict")) f.verdict = ctx.query.at("verdict");
        if (ctx.query.count("request_id")) f.request_id = ctx.query.at("request_id");
        if (ctx.query.count("from_ms") || ctx.query.count("to_ms")) {
            int64_t from = ctx.query.count("from_ms")
                               ? parse_int64(ctx.query.at("from_ms"), "from_ms")
                               : 0;
            int64_t to = ctx.query.count("to_ms") ? parse_int64(ctx.query.at("to_ms"), "to_ms")
                                                  : INT64_MAX;
            f.time_range_ms = std::pair<int64_t, int64_t>{from, to};
        }
        auto records = audit_.query(f);
        json arr = json::array();
        for (const auto& r : records) arr.push_back(json::parse(r.to_jsonl()));
        return {200, json{{"count", arr.size()}, {"records", std::move(arr)}}};
    }
    if (route.action == "admin.metrics") return handle_metrics();
    if (route.action == "admin.templates") {
        json body = parse_body(ctx);
        json list = body.contains("templates") ? body["templates"] : json::array({body});
        std::vector<std::string> ids;
        for (const auto& tj : list) {
            auto t = dsn::ChannelTemplate::from_json(tj);
            broker_.add_template(t);
            ids.push_back(t.template_id);
        }
        return {200, json{{"added", ids.size()}, {"template_ids", ids}}};
    }
    // admin.profile
    if (ctx.method == "PUT") {
        json body = parse_body(ctx);
        set_profile_name(body.at("profile").get<std::string>());
    }
    auto cur = state();
    return {200, json{{"profile", cur->profile.name},
                      {"level", cur->profile.level},
                      {"max_token_ttl_seconds", cur->cfg.max_token_ttl_seconds},
                      {"mfa_required", cur->cfg.mfa_required},
                      {"max_delegation_depth", cur->cfg.max_delegation_depth},
                      {"reservation_requires_approval", cur->cfg.reservation_requires_approval},
                      {"allowed_stream_modes", cur->cfg.allowed_stream_modes}}};
}

Response Gateway::handle_reservations(const RequestContext& ctx, const RouteMatch& route,
                                      const State& st) {
    int64_t now = clock_.now_seconds();
    if (ctx.method == "GET") {
        auto listed =
            with_scheduler([&](sched::Scheduler& s) { return s.list_reservations(now); });
        json windows = json::array();
        for (const auto& lw : listed) {
            auto j = window_json(lw.window);
            j["conflict"] = lw.conflict;
            windows.push_back(std::move(j));
        }
        json pending = json::array();
        {
            std::lock_guard lk(resv_mu_);
            for (const auto& [id, w] : pending_resv_) {
                auto j = window_json(w);
                j["reservation_id"] = id;
                j["status"] = "pending-approval";
                pending.push_back(std::move(j));
            }
        }
        return {200, json{{"windows", std::move(windows)}, {"pending", std::move(pending)}}};
    }
    if (route.params.count("id")) {
        const std::string& rid = route.params.at("id");
        sched::ReservationWindow w;
        {
            std::lock_guard lk(resv_mu_);
            auto it = pending_resv_.find(rid);
            if (it == pending_resv_.end())
                throw Error(Errc::NOT_FOUND, "no pending reservation " + rid);
            w = it->second;
            pending_resv_.erase(it);
        }
        auto wid = with_scheduler([&](sched::Scheduler& s) { return s.add_reservation(w, true); });
        return {200,
                json{{"reservation_id", rid}, {"window_id", wid}, {"status", "active"}}};
    }
    json body = parse_body(ctx);
    sched::ReservationWindow w;
    w.project = body.at("project").get<std::string>();
    w.start = body.at("start").get<int64_t>();
    w.end = body.at("end").get<int64_t>();
    w.elevated_tier = body.value("elevated_tier", std::string("urgent"));
    w.node_cap = body.at("node_cap").get<int>();
    if (st.cfg.reservation_requires_approval) {
        // Mirror the checks add_reservation will make at approval time, so a
        // bad window is refused rather than parked.
        if (w.start >= w.end) throw Error(Errc::INVALID_WINDOW, "start must precede end");
        if (!sched::tiers().count(w.elevated_tier))
            throw Error(Errc::INVALID_WINDOW, "unknown tier '" + w.elevated_tier + "'");
        int cluster = with_scheduler([](sched::Scheduler& s) { return s.node_count(); });
        if (w.node_cap < 1 || w.node_cap > cluster)
            throw Error(Errc::INVALID_WINDOW, "node_cap must be within the cluster size");
        std::string rid;
        {
            std::lock_guard lk(resv_mu_);
            char buf[16];
            std::snprintf(buf, sizeof buf, "r-%04lld", (long long)++resv_seq_);
            rid = buf;
            pending_resv_[rid] = w;
        }
        return {202, json{{"reservation_id", rid}, {"status", "pending-approval"}}};
    }
    auto wid = with_scheduler([&](sched::Scheduler& s) { return s.add_reservation(w, true); });
    return {200, json{{"window_id", wid}, {"status", "active"}}};
}

Response Gateway::handle_metrics() {
    int64_t now = clock_.now_seconds();
    auto mt = with_scheduler([&](sched::Scheduler& s) {
        pump_scheduler(s, now);
        return s.metrics(now);
    });
    json wait = json::object();
    for (const auto& [tier, v] : mt.mean_wait_by_tier) wait[tier] = v;
    json channels = json::array();
    for (const auto& info : broker_.list()) channels.push_back(info.to_json());
    return {200, json{{"time_seconds", now},
                      {"scheduler",
                       {{"utilization_busy", mt.utilization_busy},
                        {"utilization_useful", mt.utilization_useful},
                        {"preemption_count", mt.preemption_count},
                        {"lost_node_seconds", mt.lost_node_seconds},
                        {"mean_wait_by_tier", std::move(wait)}}},
                      {"gateway",
                       {{"requests_total", requests_total_.load()},
                        {"audit_records", audit_.appended_count()}}},
                      {"streams",
                       {{"channel_count", channels.size()}, {"channels", std::move(channels)}}}}};
}

// ------------------------------------------------------------------ server

struct GatewayServer::Impl {
    httplib::Server svr;
};

GatewayServer::GatewayServer(Gateway& gw) : gw_(gw), impl_(std::make_unique<Impl>()) {}

GatewayServer::~GatewayServer() { stop(); }

uint16_t GatewayServer::start(const std::string& address, int port) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        std::string bearer;
        auto authz = req.get_header_value("Authorization");
        if (authz.rfind("Bearer ", 0) == 0) bearer = authz.substr(7);
        auto ctx = gw_.make_context(req.method, req.path, std::move(bearer), req.body,
                                    req.remote_addr);
        for (const auto& [k, v] : req.params) ctx.query[k] = v;
        auto out = gw_.handle_request(std::move(ctx));
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    auto& svr = impl_->svr;
    const char* any = R"(/.*)";
    svr.Get(any, handler);
    svr.Post(any, handler);
    svr.Put(any, handler);
    svr.Delete(any, handler);

    int bound = port;
    if (port == 0) {
        bound = svr.bind_to_any_port(address);
        if (bound < 0) throw Error(Errc::IO_ERROR, "cannot bind gateway listener");
    } else if (!svr.bind_to_port(address, port)) {
        throw Error(Errc::IO_ERROR,
                    "cannot bind " + address + ":" + std::to_string(port));
    }
    thread_ = std::thread([this] { impl_->svr.listen_after_bind(); });
    svr.wait_until_ready();
    port_ = uint16_t(bound);
    return port_;
}

void GatewayServer::stop() {
    if (thread_.joinable()) {
        impl_->svr.stop();
        thread_.join();
    }
    port_ = 0;
}

}  // namespace scimesh::gateway
