#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "scimesh/clock.hpp"
#include "scimesh/dsn/node.hpp"
#include "scimesh/errors.hpp"
#include "scimesh/gateway/gateway.hpp"
#include "scimesh/scenario/runner.hpp"
#include "scimesh/scenario/stream_tasks.hpp"

using namespace scimesh;
using namespace scimesh::scenario;
using nlohmann::json;

namespace {

constexpr int64_t kStartMs = 1'700'000'000'000;

const char* kAllowAll =
    R"({"version":1,"rules":[
        {"rule_id":"allow-all","effect":"allow","subjects":"*","actions":["*"],"resources":"/"}
    ]})";

// Gateway + HTTP server + one registered L7 template, on an auto-advancing
// clock so paced producers finish instantly (the CLI test mode).
struct StackFix {
    SimClock clock{kStartMs, true};
    std::string audit_path;
    std::unique_ptr<gateway::Gateway> gw;
    std::unique_ptr<gateway::GatewayServer> server;
    uint16_t port = 0;

    explicit StackFix(const std::string& tag) {
        audit_path = "scentest_audit_" + tag + ".jsonl";
        std::remove(audit_path.c_str());
        gateway::Config cfg;
        cfg.profile = "development";
        cfg.audit_path = audit_path;
        cfg.secret = "scen-test-secret";
        cfg.cluster.node_count = 4;
        cfg.cluster.entitlements = {{"photon", {"batch", "interactive", "urgent"}}};
        gw = std::make_unique<gateway::Gateway>(cfg, clock, 91);
        gw->load_policies_text(kAllowAll);

        dsn::ChannelTemplate t;
        t.template_id = "evt";
        t.mode = dsn::ChannelMode::gateway_l7;
        t.allowed_external_cidrs = {"127.0.0.0/8"};
        t.allowed_internal_targets = {"127.0.0.1:9000"};
        t.buffer_capacity_bytes = 1 << 20;
        t.max_message_bytes = 4096;
        gw->broker().add_template(t);

        server = std::make_unique<gateway::GatewayServer>(*gw);
        port = server->start("127.0.0.1", 0);
    }

    ~StackFix() {
        server->stop();
        std::remove(audit_path.c_str());
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }

    std::string token(const std::string& subject, const std::set<std::string>& scopes) {
        return gw->issue_token(subject, "photon", scopes, 3600);
    }

    uint32_t provision(const std::string& bearer) {
        auto resp = gw->handle_request(gw->make_context(
            "POST", "/v1/streams", bearer,
            R"({"template_id":"evt","internal_target":"127.0.0.1:9000"})", "127.0.0.1"));
        REQUIRE(resp.status == 200);
        return resp.body.at("channel_id").get<uint32_t>();
    }
};

}  // namespace

// ---------------------------------------------------------- stream tasks

TEST_CASE("paced producer sends exactly rate*duration and the consumer checksum matches") {
    StackFix fx("roundtrip");
    auto tok = fx.token("alice", {"streams.provision", "streams.read"});
    uint32_t ch = fx.provision(tok);

    ConsumerConfig ccfg;
    ccfg.gateway_url = fx.url();
    ccfg.token = tok;
    ccfg.channel_id = ch;
    ccfg.topic = "data";
    ccfg.expected_count = 20;
    ConsumerProgress cp;
    ConsumerSummary cs;
    std::thread consumer([&] { cs = run_consumer(ccfg, &cp); });
    while (!cp.subscribed.load()) std::this_thread::sleep_for(std::chrono::milliseconds(1));

    ProducerConfig pcfg;
    pcfg.gateway_url = fx.url();
    pcfg.token = tok;
    pcfg.channel_id = ch;
    pcfg.topic = "data";
    pcfg.message_bytes = 256;
    pcfg.rate_per_s = 10.0;
    pcfg.duration_seconds = 2.0;
    pcfg.seed = 99;
    auto ps = run_producer(pcfg, fx.clock);
    consumer.join();

    CHECK(ps.sent == 20);
    CHECK(ps.rejected == 0);
    CHECK(ps.channel_id == ch);
    CHECK(ps.achieved_rate > 0.0);
    CHECK(cs.received == 20);
    CHECK(cs.complete);
    CHECK_FALSE(cs.closed_early);
    CHECK(cs.checksum == ps.checksum);
}

TEST_CASE("provisioning with a token lacking streams.provision is FORBIDDEN") {
    StackFix fx("forbidden");
    auto tok = fx.token("bob", {"status.read", "streams.read"});

    ProducerConfig pcfg;
    pcfg.gateway_url = fx.url();
    pcfg.token = tok;
    pcfg.template_id = "evt";
    pcfg.internal_target = "127.0.0.1:9000";
    try {
        run_producer(pcfg, fx.clock);
        FAIL("expected FORBIDDEN");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::FORBIDDEN);
    }
}

TEST_CASE("an oversize message size is refused before anything is sent") {
    StackFix fx("oversize");
    auto tok = fx.token("alice", {"streams.provision", "streams.read"});
    uint32_t ch = fx.provision(tok);

    ProducerConfig pcfg;
    pcfg.gateway_url = fx.url();
    pcfg.token = tok;
    pcfg.channel_id = ch;
    pcfg.message_bytes = 8192;  // template caps messages at 4096
    try {
        run_producer(pcfg, fx.clock);
        FAIL("expected MESSAGE_TOO_LARGE");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MESSAGE_TOO_LARGE);
    }
    CHECK(fx.gw->broker().info(ch).counters.messages == 0);
}

TEST_CASE("channel close before expected_count marks the consumer incomplete") {
    StackFix fx("earlyclose");
    auto tok = fx.token("alice", {"streams.provision", "streams.read"});
    uint32_t ch = fx.provision(tok);

    ConsumerConfig ccfg;
    ccfg.gateway_url = fx.url();
    ccfg.token = tok;
    ccfg.channel_id = ch;
    ccfg.expected_count = 50;
    ConsumerProgress cp;
    ConsumerSummary cs;
    std::thread consumer([&] { cs = run_consumer(ccfg, &cp); });
    while (!cp.subscribed.load()) std::this_thread::sleep_for(std::chrono::milliseconds(1));

    ProducerConfig pcfg;
    pcfg.gateway_url = fx.url();
    pcfg.token = tok;
    pcfg.channel_id = ch;
    pcfg.message_bytes = 256;
    pcfg.rate_per_s = 20.0;
    pcfg.duration_seconds = 1.0;
    auto ps = run_producer(pcfg, fx.clock);
    CHECK(ps.sent == 20);

    // Wait for all DATA to be written toward the consumer, then close: the
    // CLOSE frame trails the data in the stream.
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (fx.gw->broker().info(ch).counters.bytes_out < 20 * 256 &&
           std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    fx.gw->broker().teardown(ch, "photon", false);
    consumer.join();

    CHECK(cs.received == 20);
    CHECK_FALSE(cs.complete);
    CHECK(cs.closed_early);
}

TEST_CASE("a consumer on the wrong topic receives nothing") {
    StackFix fx("wrongtopic");
    auto tok = fx.token("alice", {"streams.provision", "streams.read"});
    uint32_t ch = fx.provision(tok);

    ConsumerConfig ccfg;
    ccfg.gateway_url = fx.url();
    ccfg.token = tok;
    ccfg.channel_id = ch;
    ccfg.topic = "other";
    ccfg.expected_count = 5;
    ConsumerProgress cp;
    ConsumerSummary cs;
    std::thread consumer([&] { cs = run_consumer(ccfg, &cp); });
    while (!cp.subscribed.load()) std::this_thread::sleep_for(std::chrono::milliseconds(1));

    ProducerConfig pcfg;
    pcfg.gateway_url = fx.url();
    pcfg.token = tok;
    pcfg.channel_id = ch;
    pcfg.topic = "data";
    pcfg.message_bytes = 64;
    pcfg.rate_per_s = 10.0;
    pcfg.duration_seconds = 1.0;
    run_producer(pcfg, fx.clock);
    fx.gw->broker().teardown(ch, "photon", false);
    consumer.join();

    CHECK(cs.received == 0);
    CHECK_FALSE(cs.complete);
}

// -------------------------------------------------------- scenario runner

TEST_CASE("an empty step list trivially passes") {
    auto report = run_scenario_text(R"({"steps":[]})");
    CHECK(report.pass);
    CHECK(report.steps.empty());
}

TEST_CASE("structural problems raise SCENARIO_PARSE_ERROR") {
    auto expect_parse_error = [](const std::string& text) {
        try {
            run_scenario_text(text);
            FAIL("expected SCENARIO_PARSE_ERROR for: ", text);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::SCENARIO_PARSE_ERROR);
        }
    };
    expect_parse_error("this is not json");
    expect_parse_error(R"({"no_steps": true})");
    expect_parse_error(R"({"steps":[{"action":"noop"}]})");                  // missing at
    expect_parse_error(R"({"steps":[{"at":0,"action":"time_warp"}]})");      // unknown action
    expect_parse_error(
        R"({"steps":[{"at":0,"action":"noop",
            "assert":{"metric":"bogus.thing","op":"==","value":1}}]})");     // unknown root
    expect_parse_error(
        R"({"steps":[{"at":0,"action":"noop",
            "assert":{"metric":"scheduler.jobs","op":"~=","value":1}}]})");  // unknown op
    expect_parse_error(
        R"({"steps":[{"at":0,"action":"noop",
            "assert":{"metric":"scheduler.jobs"}}]})");                      // missing value
}

TEST_CASE("an assertion on an unknown metric field raises SCENARIO_PARSE_ERROR at evaluation") {
    try {
        run_scenario_text(
            R"({"steps":[{"at":0,"action":"noop",
                "assert":{"metric":"scheduler.bogus_field","op":"==","value":1}}]})");
        FAIL("expected SCENARIO_PARSE_ERROR");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SCENARIO_PARSE_ERROR);
    }
}

TEST_CASE("failed assertions are recorded without aborting the scenario") {
    auto report = run_scenario_text(
        R"({"steps":[
            {"at":0,"action":"noop","assert":{"metric":"scheduler.jobs","op":"==","value":5}},
            {"at":1,"action":"noop","assert":{"metric":"scheduler.jobs","op":"==","value":0}}
        ]})");
    CHECK_FALSE(report.pass);
    REQUIRE(report.steps.size() == 2);
    REQUIRE(report.steps[0].assertions.size() == 1);
    CHECK_FALSE(report.steps[0].assertions[0].pass);
    CHECK(report.steps[0].assertions[0].observed == "0");
    CHECK(report.steps[1].assertions[0].pass);
}

namespace {

const char* kMiniScenario = R"({
  "name": "mini",
  "seed": 5,
  "start_seconds": 1700000000,
  "config": {
    "profile": "development",
    "secret": "mini-secret",
    "audit_path": "scen_mini_audit.jsonl",
    "cluster": {"node_count": 4, "grace_seconds": 10,
                 "entitlements": {"photon": ["batch", "interactive", "urgent"]}}
  },
  "policies": {"version": 1, "rules": [
    {"rule_id": "allow-all", "effect": "allow", "subjects": "*",
     "actions": ["*"], "resources": "/"}]},
  "templates": [
    {"template_id": "evt", "mode": "gateway_l7",
     "allowed_external_cidrs": ["127.0.0.0/8"],
     "allowed_internal_targets": ["127.0.0.1:9000"],
     "buffer_capacity_bytes": 1048576, "overflow_policy": "block",
     "max_message_bytes": 4096}],
  "steps": [
    {"at": 0, "action": "issue_token",
     "args": {"name": "alice", "subject": "alice", "project": "photon", "ttl_seconds": 3600,
              "scopes": ["status.read", "jobs.submit", "jobs.read",
                          "streams.provision", "streams.read"]}},
    {"at": 0, "action": "provision_stream",
     "args": {"name": "c", "token": "alice", "template_id": "evt",
              "internal_target": "127.0.0.1:9000"}},
    {"at": 0, "action": "start_consumer",
     "args": {"name": "sink", "token": "alice", "channel": "c", "topic": "t",
              "expected_count": 20}},
    {"at": 0, "action": "start_producer",
     "args": {"name": "src", "token": "alice", "channel": "c", "topic": "t",
              "message_bytes": 128, "rate_per_s": 20.0, "duration_seconds": 1.0, "seed": 3}},
    {"at": 2, "action": "submit_job",
     "args": {"token": "alice", "store_as": "j1", "nodes": 2,
              "walltime_seconds": 30, "qos": "batch"}},
    {"at": 3, "action": "await_task", "args": {"task": "src"},
     "assert": [{"metric": "producer.src.sent", "op": "==", "value": 20},
                 {"metric": "producer.src.rejected", "op": "==", "value": 0}]},
    {"at": 3, "action": "await_task", "args": {"task": "sink"},
     "assert": [{"metric": "consumer.sink.received", "op": "==", "value": 20},
                 {"metric": "consumer.sink.checksum", "op": "==",
                  "value_from": "producer.src.checksum"}]},
    {"at": 4, "action": "noop",
     "assert": [{"metric": "job.j1.phase", "op": "==", "value": "running"},
                 {"metric": "channel.c.drops", "op": "==", "value": 0},
                 {"metric": "channel.c.messages", "op": "==", "value": 20},
                 {"metric": "audit.count", "op": "==",
                  "value_from": "gateway.requests_total"}]}
  ]
})";

}  // namespace

TEST_CASE("a streaming scenario passes and reruns byte-identically") {
    auto first = run_scenario_text(kMiniScenario);
    for (const auto& s : first.steps) {
        INFO(s.action, " at ", s.at, ": ", s.error);
        CHECK(s.ok);
        for (const auto& a : s.assertions) {
            INFO(a.text, " observed ", a.observed);
            CHECK(a.pass);
        }
    }
    CHECK(first.pass);

    auto second = run_scenario_text(kMiniScenario);
    CHECK(second.pass);
    CHECK(first.to_json().dump(2) == second.to_json().dump(2));
    std::remove("scen_mini_audit.jsonl");
}
