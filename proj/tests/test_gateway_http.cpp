#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scimesh/clock.hpp"
#include "scimesh/dsn/node.hpp"
#include "scimesh/errors.hpp"
#include "scimesh/gateway/gateway.hpp"

using namespace scimesh;
using namespace scimesh::gateway;
using nlohmann::json;

namespace {

constexpr int64_t kStartMs = 1'700'000'000'000;  // clock origin for every fixture
constexpr int64_t kStartS = kStartMs / 1000;

const char* kAllowAll =
    R"({"version":1,"rules":[
        {"rule_id":"allow-all","effect":"allow","subjects":"*","actions":["*"],"resources":"/"}
    ]})";

struct GwFix {
    SimClock clock{kStartMs};
    std::string audit_path;
    std::unique_ptr<Gateway> gw;

    explicit GwFix(const std::string& profile = "development",
                   const std::string& tag = "main") {
        audit_path = "gwtest_audit_" + tag + ".jsonl";
        std::remove(audit_path.c_str());
        Config cfg;
        cfg.profile = profile;
        cfg.audit_path = audit_path;
        cfg.secret = "gw-test-secret";
        cfg.cluster.node_count = 8;
        cfg.cluster.entitlements = {{"photon", {"batch", "interactive", "urgent"}}};
        gw = std::make_unique<Gateway>(cfg, clock, 20250819);
        gw->load_policies_text(kAllowAll);
    }

    ~GwFix() { std::remove(audit_path.c_str()); }

    std::string token(const std::string& subject, const std::string& project,
                      const std::set<std::string>& scopes, int64_t ttl = 3600) {
        return gw->issue_token(subject, project, scopes, ttl);
    }

    Response req(const std::string& method, const std::string& path, const std::string& bearer,
                 const std::string& body = "") {
        return gw->handle_request(gw->make_context(method, path, bearer, body, "127.0.0.1"));
    }

    AuditRecord last_audit() {
        auto records = gw->audit().query({});
        REQUIRE(!records.empty());
        return records.back();
    }
};

}  // namespace

// ------------------------------------------------------------- pipeline

TEST_CASE("an expired token is refused with 401 and audited as deny/EXPIRED") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"status.read"}, 60);
    fx.clock.advance_millis(61'000);

    auto resp = fx.req("GET", "/v1/status", tok);
    CHECK(resp.status == 401);
    CHECK(resp.body.at("error") == "EXPIRED");

    auto rec = fx.last_audit();
    CHECK(rec.verdict == "deny");
    CHECK(rec.reason == "EXPIRED");
    CHECK(rec.http_status == 401);
    CHECK(rec.subject == "anonymous");
    CHECK(rec.resource == "/v1/status");
}

TEST_CASE("each authentication failure mode reports its own 401 reason") {
    GwFix fx;

    SUBCASE("missing or garbage bearer") {
        CHECK(fx.req("GET", "/v1/status", "").body.at("error") == "MALFORMED");
        CHECK(fx.req("GET", "/v1/status", "not-a-token").body.at("error") == "MALFORMED");
    }
    SUBCASE("tampered signature") {
        auto tok = fx.token("alice", "photon", {"status.read"});
        tok.back() = tok.back() == 'A' ? 'B' : 'A';  // stay inside the base64url alphabet
        auto resp = fx.req("GET", "/v1/status", tok);
        CHECK(resp.status == 401);
        CHECK(resp.body.at("error") == "BAD_SIGNATURE");
    }
    SUBCASE("revoked token") {
        auto tok = fx.token("alice", "photon", {"status.read"});
        auto claims = fx.gw->tokens().decode_verified(tok);
        fx.gw->tokens().revoke(claims.token_id);
        auto resp = fx.req("GET", "/v1/status", tok);
        CHECK(resp.status == 401);
        CHECK(resp.body.at("error") == "REVOKED");
    }
}

TEST_CASE("a valid, policy-allowed request returns 200 and an allow audit record") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"status.read"});

    auto resp = fx.req("GET", "/v1/status", tok);
    CHECK(resp.status == 200);
    CHECK(resp.body.at("service") == "scimesh-gateway");
    CHECK(resp.body.at("profile") == "development");

    auto rec = fx.last_audit();
    CHECK(rec.verdict == "allow");
    CHECK(rec.reason == "OK");
    CHECK(rec.subject == "alice");
    CHECK(rec.action == "status.read");
    CHECK(rec.http_status == 200);
}

TEST_CASE("unknown routes 404 after authentication and are audited") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"status.read"});

    auto resp = fx.req("GET", "/v1/nope", tok);
    CHECK(resp.status == 404);
    CHECK(resp.body.at("error") == "NOT_FOUND");
    CHECK(fx.last_audit().reason == "NOT_FOUND");

    // authentication still runs first: expired token on an unknown path is a 401
    auto shortlived = fx.token("bob", "photon", {"status.read"}, 10);
    fx.clock.advance_millis(11'000);
    CHECK(fx.req("GET", "/v1/nope", shortlived).status == 401);
}

TEST_CASE("missing scopes deny with 403 before any backend work") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"status.read"});  // no jobs.submit

    auto resp = fx.req("POST", "/v1/jobs", tok, R"({"walltime_seconds":60})");
    CHECK(resp.status == 403);
    CHECK(resp.body.at("error") == "FORBIDDEN");
    auto none = fx.gw->with_scheduler([](sched::Scheduler& s) { return s.jobs().size(); });
    CHECK(none == 0);
}

TEST_CASE("policy denials outrank rate limiting: 403 even when the bucket is empty") {
    GwFix fx;
    auto alice = fx.token("alice", "photon", {"jobs.submit", "jobs.read"});

    // burn the whole (alice, submit) bucket with allowed requests
    for (int i = 0; i < 10; ++i) {
        auto r = fx.req("POST", "/v1/jobs", alice, R"({"walltime_seconds":30})");
        CHECK(r.status == 200);
    }
    auto eleventh = fx.req("POST", "/v1/jobs", alice, R"({"walltime_seconds":30})");
    CHECK(eleventh.status == 429);
    CHECK(eleventh.body.at("error") == "RATE_LIMITED");

    // now the same subject becomes policy-denied; the verdict must flip to 403
    fx.gw->load_policies_text(
        R"({"version":1,"rules":[
            {"rule_id":"allow-all","effect":"allow","subjects":"*","actions":["*"],"resources":"/"},
            {"rule_id":"block-alice","effect":"deny","subjects":"alice","actions":["jobs.*"],"resources":"/"}
        ]})");
    auto denied = fx.req("POST", "/v1/jobs", alice, R"({"walltime_seconds":30})");
    CHECK(denied.status == 403);
    CHECK(denied.body.at("error") == "FORBIDDEN");
}

TEST_CASE("the submit bucket admits exactly ten per burst and refills at 1/s") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"jobs.submit"});

    int allowed = 0, limited = 0;
    for (int i = 0; i < 12; ++i) {
        auto r = fx.req("POST", "/v1/jobs", tok, R"({"walltime_seconds":5})");
        (r.status == 200 ? allowed : limited)++;
    }
    CHECK(allowed == 10);
    CHECK(limited == 2);

    fx.clock.advance_millis(1'000);  // exactly one token back
    CHECK(fx.req("POST", "/v1/jobs", tok, R"({"walltime_seconds":5})").status == 200);
    CHECK(fx.req("POST", "/v1/jobs", tok, R"({"walltime_seconds":5})").status == 429);
}

TEST_CASE("rate limits are keyed per subject: one caller cannot starve another") {
    GwFix fx;
    auto alice = fx.token("alice", "photon", {"jobs.submit"});
    auto bob = fx.token("bob", "photon", {"jobs.submit"});
    for (int i = 0; i < 11; ++i) fx.req("POST", "/v1/jobs", alice, R"({"walltime_seconds":5})");
    CHECK(fx.req("POST", "/v1/jobs", bob, R"({"walltime_seconds":5})").status == 200);
}

TEST_CASE("a broken audit store fails requests closed: 503 and no backend effect") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"jobs.submit", "jobs.read"});

    REQUIRE(fx.req("POST", "/v1/jobs", tok, R"({"walltime_seconds":60})").status == 200);
    auto jobs_before = fx.gw->with_scheduler([](sched::Scheduler& s) { return s.jobs().size(); });

    fx.gw->audit().fail_appends_for_testing(true);
    auto resp = fx.req("POST", "/v1/jobs", tok, R"({"walltime_seconds":60})");
    CHECK(resp.status == 503);
    CHECK(resp.body.at("error") == "STORE_UNAVAILABLE");
    auto jobs_after = fx.gw->with_scheduler([](sched::Scheduler& s) { return s.jobs().size(); });
    CHECK(jobs_after == jobs_before);  // the request never reached the scheduler

    fx.gw->audit().fail_appends_for_testing(false);
    CHECK(fx.req("POST", "/v1/jobs", tok, R"({"walltime_seconds":60})").status == 200);
}

TEST_CASE("audit completeness holds under concurrent mixed traffic") {
    GwFix fx;
    auto good = fx.token("alice", "photon", {"status.read"});

    constexpr int kThreads = 8, kPerThread = 25;
    std::atomic<int> ok{0}, denied{0};
    auto before = fx.gw->audit().appended_count();
    std::vector<std::thread> workers;
    for (int t = 0; t < kThreads; ++t) {
        workers.emplace_back([&, t] {
            for (int i = 0; i < kPerThread; ++i) {
                bool valid = (t + i) % 2 == 0;
                auto resp = fx.req("GET", "/v1/status", valid ? good : "junk-token");
                if (resp.status == 200)
                    ok.fetch_add(1);
                else if (resp.status == 401)
                    denied.fetch_add(1);
            }
        });
    }
    for (auto& w : workers) w.join();

    CHECK(ok.load() + denied.load() == kThreads * kPerThread);
    CHECK(fx.gw->audit().appended_count() - before == kThreads * kPerThread);
    // and the backing file really holds one line per request
    CHECK(fx.gw->audit().query({}).size() == before + kThreads * kPerThread);
}

TEST_CASE("every response carries the request id that its audit record uses") {
    GwFix fx;
    auto resp = fx.req("GET", "/v1/status", "junk");
    auto rid = resp.body.at("request_id").get<std::string>();
    CHECK(rid.size() == 32);
    AuditFilter f;
    f.request_id = rid;
    auto records = fx.gw->audit().query(f);
    REQUIRE(records.size() == 1);
    CHECK(records[0].http_status == 401);
}

// ------------------------------------------------------------- backends

TEST_CASE("job lifecycle through the gateway: submit, read, cancel") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"jobs.submit", "jobs.read", "jobs.cancel"});

    auto sub = fx.req("POST", "/v1/jobs", tok,
                      R"({"nodes":2,"walltime_seconds":120,"qos":"interactive"})");
    REQUIRE(sub.status == 200);
    auto id = sub.body.at("job_id").get<std::string>();
    CHECK(id == "j-000001");

    auto got = fx.req("GET", "/v1/jobs/" + id, tok);
    REQUIRE(got.status == 200);
    CHECK(got.body.at("phase") == "running");  // 8 free nodes, placed immediately
    CHECK(got.body.at("qos") == "interactive");
    CHECK(got.body.at("assigned_nodes").size() == 2);

    auto gone = fx.req("DELETE", "/v1/jobs/" + id, tok);
    CHECK(gone.status == 200);
    CHECK(fx.req("GET", "/v1/jobs/" + id, tok).body.at("phase") == "cancelled");

    CHECK(fx.req("GET", "/v1/jobs/j-999999", tok).status == 404);
}

TEST_CASE("scheduler validation errors surface with their stable names") {
    GwFix fx;
    auto tok = fx.token("carol", "fusion", {"jobs.submit"});

    auto too_big = fx.req("POST", "/v1/jobs", tok, R"({"nodes":9,"walltime_seconds":10})");
    CHECK(too_big.status == 400);
    CHECK(too_big.body.at("error") == "NODES_EXCEED_CLUSTER");

    // fusion has only the default batch entitlement
    auto wrong_tier =
        fx.req("POST", "/v1/jobs", tok, R"({"nodes":1,"walltime_seconds":10,"qos":"urgent"})");
    CHECK(wrong_tier.status == 403);
    CHECK(wrong_tier.body.at("error") == "QOS_NOT_ENTITLED");

    auto bad_body = fx.req("POST", "/v1/jobs", tok, "{nope");
    CHECK(bad_body.status == 400);
    CHECK(bad_body.body.at("error") == "MALFORMED");
}

TEST_CASE("workflows submit atomically through the gateway") {
    GwFix fx;
    auto tok = fx.token("alice", "photon", {"jobs.submit", "jobs.read"});

    auto ok = fx.req("POST", "/v1/workflows", tok,
                     R"({"jobs":[
                         {"job_id":"stage-a","walltime_seconds":30},
                         {"job_id":"stage-b","walltime_seconds":30,"depends_on":["stage-a"]}
                     ]})");
    REQUIRE(ok.status == 200);
    CHECK(ok.body.at("job_ids").size() == 2);

    auto cyc = fx.req("POST", "/v1/workflows", tok,
                      R"({"jobs":[
                          {"job_id":"x","walltime_seconds":30,"depends_on":["y"]},
                          {"job_id":"y","walltime_seconds":30,"depends_on":["x"]}
                      ]})");
    CHECK(cyc.status == 400);
    CHECK(cyc.body.at("error") == "CYCLE_DETECTED");
}

TEST_CASE("delegation endpoint narrows scopes without requiring a delegate scope") {
    GwFix fx;
    auto parent = fx.token("alice", "photon", {"status.read", "jobs.submit"});

    auto resp = fx.req("POST", "/v1/tokens/delegate", parent,
                       R"({"scopes":["status.read"],"ttl_seconds":600})");
    REQUIRE(resp.status == 200);
    auto child = resp.body.at("token").get<std::string>();

    CHECK(fx.req("GET", "/v1/status", child).status == 200);
    auto denied = fx.req("POST", "/v1/jobs", child, R"({"walltime_seconds":10})");
    CHECK(denied.status == 403);  // child no longer covers jobs.submit

    auto escalate = fx.req("POST", "/v1/tokens/delegate", child,
                           R"({"scopes":["jobs.submit"],"ttl_seconds":600})");
    CHECK(escalate.status == 403);
    CHECK(escalate.body.at("error") == "SCOPE_ESCALATION");
}

TEST_CASE("admin token endpoints issue and revoke over HTTP semantics") {
    GwFix fx;
    auto admin = fx.token("root", "ops", {"admin.*"});

    auto made = fx.req("POST", "/v1/tokens", admin,
                       R"({"subject":"dana","project":"photon","scopes":["status.read"],
                           "ttl_seconds":3600})");
    REQUIRE(made.status == 200);
    auto tok = made.body.at("token").get<std::string>();
    auto tid = made.body.at("token_id").get<std::string>();
    CHECK(fx.req("GET", "/v1/status", tok).status == 200);

    auto gone = fx.req("DELETE", "/v1/tokens/" + tid, admin);
    CHECK(gone.status == 200);
    CHECK(gone.body.at("revoked") == 1);
    CHECK(fx.req("GET", "/v1/status", tok).status == 401);

    CHECK(fx.req("DELETE", "/v1/tokens/ffffffffffffffffffffffffffffffff", admin).status == 404);
}

TEST_CASE("policy reload swaps atomically and applies to the next request") {
    GwFix fx;
    auto admin = fx.token("root", "ops", {"admin.*"});
    auto tok = fx.token("alice", "photon", {"status.read"});

    REQUIRE(fx.req("GET", "/v1/status", tok).status == 200);
    auto upd = fx.req("POST", "/v1/policies", admin,
                      R"({"version":1,"rules":[
                          {"rule_id":"admins-only","effect":"allow","subjects":"root",
                           "actions":["*"],"resources":"/"}
                      ]})");
    REQUIRE(upd.status == 200);
    CHECK(upd.body.at("rules") == 1);

    CHECK(fx.req("GET", "/v1/status", tok).status == 403);  // deny-by-default now
    CHECK(fx.req("GET", "/v1/metrics", admin).status == 200);

    auto bad = fx.req("POST", "/v1/policies", admin, R"({"rules":"nope"})");
    CHECK(bad.status == 400);
    CHECK(bad.body.at("error") == "PARSE_ERROR");
    // the broken document must not have clobbered the active set
    CHECK(fx.req("GET", "/v1/metrics", admin).status == 200);
}

TEST_CASE("reservations require approval exactly when the profile says so") {
    GwFix fx;  // development: no approval needed
    auto admin = fx.token("root", "ops", {"admin.*"});

    // active right now: listing shows live windows only
    auto direct = fx.req("POST", "/v1/reservations", admin,
                         R"({"project":"photon","start":1699999900,"end":1700000400,
                             "node_cap":4})");
    CHECK(direct.status == 200);
    CHECK(direct.body.at("status") == "active");

    auto sw = fx.req("PUT", "/v1/profile", admin, R"({"profile":"moderate_production"})");
    REQUIRE(sw.status == 200);
    CHECK(sw.body.at("reservation_requires_approval") == true);

    auto parked = fx.req("POST", "/v1/reservations", admin,
                         R"({"project":"photon","start":1700000100,"end":1700000600,
                             "node_cap":2})");
    CHECK(parked.status == 202);
    CHECK(parked.body.at("status") == "pending-approval");
    auto rid = parked.body.at("reservation_id").get<std::string>();

    auto listed = fx.req("GET", "/v1/reservations", admin);
    REQUIRE(listed.status == 200);
    CHECK(listed.body.at("windows").size() == 1);   // only the approved one
    CHECK(listed.body.at("pending").size() == 1);

    auto approved = fx.req("POST", "/v1/reservations/" + rid + "/approve", admin);
    CHECK(approved.status == 200);
    CHECK(approved.body.at("status") == "active");

    fx.clock.advance_millis(200'000);  // into the second window's span
    CHECK(fx.req("GET", "/v1/reservations", admin).body.at("windows").size() == 2);
    CHECK(fx.req("GET", "/v1/reservations", admin).body.at("pending").size() == 0);

    // double approval: the pending record is gone
    CHECK(fx.req("POST", "/v1/reservations/" + rid + "/approve", admin).status == 404);

    auto invalid = fx.req("POST", "/v1/reservations", admin,
                          R"({"project":"photon","start":9,"end":5,"node_cap":2})");
    CHECK(invalid.status == 400);
    CHECK(invalid.body.at("error") == "INVALID_WINDOW");
}

TEST_CASE("profile swaps tighten live limits but never break issued tokens") {
    GwFix fx;
    auto admin = fx.token("root", "ops", {"admin.*"});
    auto dev_token = fx.token("alice", "photon", {"status.read"}, 86400 * 20);  // 20 days

    REQUIRE(fx.req("PUT", "/v1/profile", admin, R"({"profile":"moderate_production"})").status ==
            200);

    // the old long-lived token still authenticates
    CHECK(fx.req("GET", "/v1/status", dev_token).status == 200);

    // but new issuance obeys the tightened ttl and mfa rules
    CHECK_THROWS_AS(fx.gw->issue_token("bob", "photon", {"status.read"}, 86400 * 20), Error);
    CHECK_THROWS_WITH(fx.gw->issue_token("bob", "photon", {"status.read"}, 3600, /*mfa=*/false),
                      doctest::Contains("MFA_REQUIRED"));

    CHECK(fx.req("PUT", "/v1/profile", admin, R"({"profile":"nope"})").status == 400);
}

TEST_CASE("metrics endpoint reports scheduler, gateway, and stream counters") {
    GwFix fx;
    auto admin = fx.token("root", "ops", {"admin.*"});
    auto tok = fx.token("alice", "photon", {"jobs.submit"});

    fx.req("POST", "/v1/jobs", tok, R"({"nodes":4,"walltime_seconds":50})");
    fx.clock.advance_millis(10'000);

    auto m = fx.req("GET", "/v1/metrics", admin);
    REQUIRE(m.status == 200);
    CHECK(m.body.at("scheduler").at("utilization_busy").get<double>() ==
          doctest::Approx(0.5));  // 4 of 8 nodes for the whole window
    CHECK(m.body.at("gateway").at("requests_total").get<int64_t>() >= 2);
    CHECK(m.body.at("streams").at("channel_count") == 0);
}

// ------------------------------------------------------------- sockets

TEST_CASE("http server end-to-end: real requests through real sockets") {
    GwFix fx;
    auto admin = fx.token("root", "ops", {"admin.*"});
    auto alice = fx.token("alice", "photon",
                          {"status.read", "jobs.submit", "jobs.read", "streams.provision",
                           "streams.read"});

    GatewayServer server(*fx.gw);
    uint16_t port = server.start("127.0.0.1", 0);
    REQUIRE(port != 0);
    httplib::Client cli("127.0.0.1", port);

    SUBCASE("status, auth failures, and unknown routes") {
        auto ok = cli.Get("/v1/status", {{"Authorization", "Bearer " + alice}});
        REQUIRE(ok);
        CHECK(ok->status == 200);
        CHECK(json::parse(ok->body).at("service") == "scimesh-gateway");

        auto noauth = cli.Get("/v1/status");
        REQUIRE(noauth);
        CHECK(noauth->status == 401);

        auto nowhere = cli.Get("/v1/nowhere", {{"Authorization", "Bearer " + alice}});
        REQUIRE(nowhere);
        CHECK(nowhere->status == 404);
    }

    SUBCASE("submit a job and read it back over the wire") {
        auto sub = cli.Post("/v1/jobs", {{"Authorization", "Bearer " + alice}},
                            R"({"nodes":1,"walltime_seconds":30})", "application/json");
        REQUIRE(sub);
        REQUIRE(sub->status == 200);
        auto id = json::parse(sub->body).at("job_id").get<std::string>();

        auto got = cli.Get("/v1/jobs/" + id, {{"Authorization", "Bearer " + alice}});
        REQUIRE(got);
        CHECK(got->status == 200);
        CHECK(json::parse(got->body).at("phase") == "running");
    }

    SUBCASE("audit query over http returns the records the traffic created") {
        for (int i = 0; i < 3; ++i)
            cli.Get("/v1/status", {{"Authorization", "Bearer " + alice}});
        auto q = cli.Get("/v1/audit?subject=alice&verdict=allow",
                         {{"Authorization", "Bearer " + admin}});
        REQUIRE(q);
        REQUIRE(q->status == 200);
        auto doc = json::parse(q->body);
        CHECK(doc.at("count").get<int>() >= 3);
        for (const auto& r : doc.at("records")) {
            CHECK(r.at("subject") == "alice");
            CHECK(r.at("verdict") == "allow");
        }
    }

    SUBCASE("provision a stream over http and move bytes through it") {
        auto t = cli.Post("/v1/templates", {{"Authorization", "Bearer " + admin}},
                          R"({"template_id":"evt","mode":"gateway_l7",
                              "allowed_external_cidrs":["127.0.0.0/8"],
                              "allowed_internal_targets":["127.0.0.1:1"],
                              "buffer_capacity_bytes":1048576,
                              "max_message_bytes":65536})",
                          "application/json");
        REQUIRE(t);
        REQUIRE(t->status == 200);

        auto prov = cli.Post("/v1/streams", {{"Authorization", "Bearer " + alice}},
                             R"({"template_id":"evt","internal_target":"127.0.0.1:1"})",
                             "application/json");
        REQUIRE(prov);
        REQUIRE(prov->status == 200);
        auto info = json::parse(prov->body);
        auto channel_id = info.at("channel_id").get<uint32_t>();
        auto data_port = info.at("data_port").get<uint16_t>();
        CHECK(info.at("state") == "active");
        REQUIRE(data_port != 0);

        auto consumer = dsn::L7Client::connect("127.0.0.1", data_port, channel_id, alice);
        consumer.subscribe("hits");
        auto producer = dsn::L7Client::connect("127.0.0.1", data_port, channel_id, alice);
        for (int i = 0; i < 5; ++i) producer.publish("hits", "evt-" + std::to_string(i));
        for (int i = 0; i < 5; ++i) {
            auto m = consumer.next_message(2000);
            REQUIRE(m.has_value());
            CHECK(m->topic == "hits");
            CHECK(*m->body == "evt-" + std::to_string(i));
        }

        auto stat = cli.Get("/v1/streams/" + std::to_string(channel_id),
                            {{"Authorization", "Bearer " + alice}});
        REQUIRE(stat);
        CHECK(stat->status == 200);
        CHECK(json::parse(stat->body).at("counters").at("messages") == 5);

        producer.close();
        consumer.close();
        auto del = cli.Delete("/v1/streams/" + std::to_string(channel_id),
                              {{"Authorization", "Bearer " + alice}});
        REQUIRE(del);
        CHECK(del->status == 200);
        CHECK(json::parse(del->body).at("counters").at("messages") == 5);

        auto after = cli.Get("/v1/streams/" + std::to_string(channel_id),
                             {{"Authorization", "Bearer " + alice}});
        REQUIRE(after);
        CHECK(after->status == 404);
    }

    server.stop();
}

TEST_CASE("http_status_for maps the error families the spec names") {
    CHECK(http_status_for(Errc::EXPIRED) == 401);
    CHECK(http_status_for(Errc::BAD_SIGNATURE) == 401);
    CHECK(http_status_for(Errc::REVOKED) == 401);
    CHECK(http_status_for(Errc::FORBIDDEN) == 403);
    CHECK(http_status_for(Errc::NOT_FOUND) == 404);
    CHECK(http_status_for(Errc::RATE_LIMITED) == 429);
    CHECK(http_status_for(Errc::STORE_UNAVAILABLE) == 503);
    CHECK(http_status_for(Errc::BACKEND_FAILURE) == 502);
}
