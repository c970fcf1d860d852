#include "scimesh/scenario/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "scimesh/clock.hpp"
#include "scimesh/errors.hpp"
#include "scimesh/gateway/gateway.hpp"
#include "scimesh/scenario/stream_tasks.hpp"

namespace scimesh::scenario {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& detail) {
    throw Error(Errc::SCENARIO_PARSE_ERROR, detail);
}

const std::set<std::string>& action_vocabulary() {
    static const std::set<std::string> v{
        "noop",           "issue_token",    "load_policies", "add_template",
        "add_reservation", "submit_job",    "submit_batch",  "cancel_job",
        "provision_stream", "start_producer", "start_consumer", "await_task",
        "teardown_stream", "set_profile"};
    return v;
}

const std::set<std::string>& metric_roots() {
    static const std::set<std::string> v{"producer", "consumer", "job",     "channel",
                                         "scheduler", "audit",   "gateway", "time"};
    return v;
}

const std::set<std::string>& assert_ops() {
    static const std::set<std::string> v{"==", "!=", ">=", "<=", ">", "<"};
    return v;
}

struct Assertion {
    std::string metric;
    std::string op;
    json value;              // literal right-hand side
    std::string value_from;  // metric right-hand side; wins when non-empty
};

struct Step {
    int64_t at = 0;
    std::string action;
    json args = json::object();
    std::vector<Assertion> asserts;
};

struct Parsed {
    std::string name;
    uint64_t seed = 1;
    int64_t start_seconds = 1700000000;
    json config = json::object();
    json policies;   // null = none
    json templates;  // null = none
    std::vector<Step> steps;
};

std::vector<std::string> split_path(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

void check_metric_shape(const std::string& path) {
    auto parts = split_path(path);
    if (parts.empty() || parts[0].empty() || !metric_roots().count(parts[0]))
        parse_fail("unknown metric '" + path + "'");
}

Assertion parse_assertion(const json& j) {
    if (!j.is_object()) parse_fail("assertion must be an object");
    Assertion a;
    if (!j.contains("metric") || !j["metric"].is_string())
        parse_fail("assertion needs a string 'metric'");
    a.metric = j["metric"].get<std::string>();
    check_metric_shape(a.metric);
    a.op = j.value("op", std::string("=="));
    if (!assert_ops().count(a.op)) parse_fail("unknown assertion op '" + a.op + "'");
    bool has_value = j.contains("value");
    bool has_from = j.contains("value_from");
    if (has_value == has_from)
        parse_fail("assertion on '" + a.metric + "' needs exactly one of value/value_from");
    if (has_from) {
        if (!j["value_from"].is_string()) parse_fail("value_from must be a metric path");
        a.value_from = j["value_from"].get<std::string>();
        check_metric_shape(a.value_from);
    } else {
        a.value = j["value"];
    }
    return a;
}

Parsed parse_scenario(const std::string& text, const std::string& default_name) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        parse_fail(std::string("bad JSON: ") + e.what());
    }
    if (!doc.is_object()) parse_fail("scenario document must be a JSON object");

    Parsed p;
    p.name = doc.value("name", default_name);
    p.seed = doc.value("seed", uint64_t{1});
    p.start_seconds = doc.value("start_seconds", int64_t{1700000000});
    if (p.start_seconds < 0) parse_fail("start_seconds must be non-negative");
    if (doc.contains("config")) {
        if (!doc["config"].is_object()) parse_fail("config must be an object");
        p.config = doc["config"];
    }
    if (doc.contains("policies")) {
        if (!doc["policies"].is_object()) parse_fail("policies must be an object");
        p.policies = doc["policies"];
    }
    if (doc.contains("templates")) {
        if (!doc["templates"].is_array()) parse_fail("templates must be an array");
        p.templates = doc["templates"];
    }
    if (!doc.contains("steps") || !doc["steps"].is_array())
        parse_fail("scenario needs a 'steps' array");

    for (const auto& sj : doc["steps"]) {
        if (!sj.is_object()) parse_fail("each step must be an object");
        Step s;
        if (!sj.contains("at") || !sj["at"].is_number_integer() || sj["at"].get<int64_t>() < 0)
            parse_fail("each step needs a non-negative integer 'at'");
        s.at = sj["at"].get<int64_t>();
        if (!sj.contains("action") || !sj["action"].is_string())
            parse_fail("each step needs a string 'action'");
        s.action = sj["action"].get<std::string>();
        if (!action_vocabulary().count(s.action)) parse_fail("unknown action '" + s.action + "'");
        if (sj.contains("args")) {
            if (!sj["args"].is_object()) parse_fail("step args must be an object");
            s.args = sj["args"];
        }
        if (sj.contains("assert")) {
            const json& a = sj["assert"];
            if (a.is_array())
                for (const auto& one : a) s.asserts.push_back(parse_assertion(one));
            else
                s.asserts.push_back(parse_assertion(a));
        }
        p.steps.push_back(std::move(s));
    }
    std::stable_sort(p.steps.begin(), p.steps.end(),
                     [](const Step& a, const Step& b) { return a.at < b.at; });
    return p;
}

struct ProducerTask {
    std::thread th;
    ProducerProgress progress;
    ProducerSummary summary;
    std::string error;
    std::atomic<bool> done{false};
};

struct ConsumerTask {
    std::thread th;
    ConsumerProgress progress;
    ConsumerSummary summary;
    std::string error;
    std::atomic<bool> done{false};
};

bool as_number(const json& v, double* out) {
    if (v.is_number()) {
        *out = v.get<double>();
        return true;
    }
    if (v.is_boolean()) {
        *out = v.get<bool>() ? 1.0 : 0.0;
        return true;
    }
    return false;
}

class Runner {
  public:
    explicit Runner(Parsed p) : p_(std::move(p)), clock_(p_.start_seconds * 1000, false) {}

    ScenarioReport run() {
        boot();
        ScenarioReport rep;
        rep.name = p_.name;
        rep.pass = true;
        try {
            for (const auto& st : p_.steps) {
                advance_to(st.at);
                StepResult r;
                r.at = st.at;
                r.action = st.action;
                r.ok = true;
                try {
                    exec_action(st, r);
                } catch (const Error& e) {
                    if (e.code() == Errc::SCENARIO_PARSE_ERROR) throw;
                    r.ok = false;
                    r.error = e.what();
                } catch (const std::exception& e) {
                    r.ok = false;
                    r.error = std::string("IO_ERROR: ") + e.what();
                }
                for (const auto& a : st.asserts) {
                    if (!r.ok) {
                        r.assertions.push_back(
                            {render_assert(a), "skipped: action failed", false});
                        continue;
                    }
                    try {
                        r.assertions.push_back(eval_assert(a));
                    } catch (const Error& e) {
                        if (e.code() == Errc::SCENARIO_PARSE_ERROR) throw;
                        r.assertions.push_back({render_assert(a), e.what(), false});
                    }
                }
                for (const auto& ar : r.assertions)
                    if (!ar.pass) rep.pass = false;
                if (!r.ok) rep.pass = false;
                rep.steps.push_back(std::move(r));
            }
        } catch (...) {
            shutdown();
            throw;
        }
        shutdown();
        return rep;
    }

  private:
    // ------------------------------------------------------------- lifecycle

    void boot() {
        json base{{"profile", "development"},
                  {"secret", "scenario-secret"},
                  {"audit_path", "scenario_audit.jsonl"}};
        base.merge_patch(p_.config);
        cfg_ = gateway::load_config_text(base.dump());
        std::remove(cfg_.audit_path.c_str());

        gw_ = std::make_unique<gateway::Gateway>(cfg_, clock_, p_.seed);
        if (!p_.policies.is_null()) gw_->load_policies_text(p_.policies.dump());
        if (p_.templates.is_array())
            for (const auto& tj : p_.templates)
                gw_->broker().add_template(dsn::ChannelTemplate::from_json(tj));

        server_ = std::make_unique<gateway::GatewayServer>(*gw_);
        port_ = server_->start("127.0.0.1", 0);

        int64_t ttl = gw_->effective_config().max_token_ttl_seconds;
        tokens_["admin"] = gw_->issue_token("scenario-admin", "ops", {"admin.*"}, ttl, true, 3);
    }

    void shutdown() {
        // Close every channel still open so blocked consumers see CLOSE,
        // run the clock far forward so producers parked in sleep_until wake,
        // then join the task threads before the stack goes away.
        for (const auto& info : gw_->broker().list()) {
            try {
                gw_->broker().teardown(info.channel_id, "", true);
            } catch (const Error&) {
            }
        }
        clock_.advance_millis(int64_t{1} << 40);
        for (auto& [name, t] : producers_)
            if (t->th.joinable()) t->th.join();
        for (auto& [name, t] : consumers_)
            if (t->th.joinable()) t->th.join();
        if (server_) server_->stop();
    }

    // ------------------------------------------------------------------ time

    // Advances the simulated clock one second at a time, letting paced
    // producers publish everything due at each tick before moving on. That
    // keeps task interleaving a function of the scenario, not the host.
    void advance_to(int64_t at_seconds) {
        int64_t target_ms = (p_.start_seconds + at_seconds) * 1000;
        int64_t now = clock_.now_millis();
        while (now < target_ms) {
            now = std::min(now + 1000, target_ms);
            clock_.set_millis(now);
            quiesce(now);
        }
        quiesce(clock_.now_millis());
    }

    void quiesce(int64_t now_ms) {
        using namespace std::chrono;
        auto deadline = steady_clock::now() + seconds(60);
        for (auto& [name, t] : producers_) {
            if (!t->progress.provisioned.load()) continue;
            while (!t->done.load() && t->progress.next_due_ms.load() <= now_ms) {
                if (steady_clock::now() > deadline)
                    throw Error(Errc::IO_ERROR, "producer '" + name + "' stalled");
                std::this_thread::sleep_for(microseconds(200));
            }
        }
    }

    static bool wait_flag(const std::atomic<bool>& flag, int timeout_ms) {
        using namespace std::chrono;
        auto deadline = steady_clock::now() + milliseconds(timeout_ms);
        while (!flag.load()) {
            if (steady_clock::now() > deadline) return false;
            std::this_thread::sleep_for(milliseconds(1));
        }
        return true;
    }

    // ------------------------------------------------------------ http plane

    std::string gateway_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    const std::string& token_for(const json& args, const char* key = "token") {
        std::string name = args.value(key, std::string("admin"));
        auto it = tokens_.find(name);
        if (it == tokens_.end()) parse_fail("unknown token '" + name + "'");
        return it->second;
    }

    json http_json(const std::string& method, const std::string& path, const std::string& token,
                   const json* body) {
        httplib::Client cli("127.0.0.1", port_);
        cli.set_connection_timeout(5, 0);
        cli.set_read_timeout(15, 0);
        httplib::Headers hdrs{{"Authorization", "Bearer " + token}};
        httplib::Result res;
        std::string payload = body ? body->dump() : "";
        if (method == "GET")
            res = cli.Get(path, hdrs);
        else if (method == "POST")
            res = cli.Post(path, hdrs, payload, "application/json");
        else if (method == "PUT")
            res = cli.Put(path, hdrs, payload, "application/json");
        else
            res = cli.Delete(path, hdrs, payload, "application/json");
        if (!res) throw Error(Errc::IO_ERROR, "no response from gateway for " + path);
        json parsed = json::object();
        if (!res->body.empty()) {
            try {
                parsed = json::parse(res->body);
            } catch (const json::exception&) {
                throw Error(Errc::IO_ERROR, "unparseable gateway response for " + path);
            }
        }
        if (res->status >= 400) {
            std::string name = parsed.value("error", std::string("IO_ERROR"));
            std::string detail = parsed.value("detail", "http " + std::to_string(res->status));
            throw Error(errc_from_name(name).value_or(Errc::IO_ERROR), detail);
        }
        return parsed;
    }

    uint32_t channel_ref(const std::string& ref) {
        auto it = channels_.find(ref);
        if (it != channels_.end()) return it->second;
        try {
            size_t pos = 0;
            unsigned long v = std::stoul(ref, &pos);
            if (pos == ref.size()) return static_cast<uint32_t>(v);
        } catch (const std::exception&) {
        }
        parse_fail("unknown channel '" + ref + "'");
    }

    std::string job_ref(const std::string& ref) {
        auto it = jobs_.find(ref);
        return it != jobs_.end() ? it->second : ref;
    }

    // --------------------------------------------------------------- actions

    void exec_action(const Step& st, StepResult& r) {
        const json& a = st.args;
        if (st.action == "noop") {
            return;
        }
        if (st.action == "issue_token") {
            std::string name = require_str(a, "name");
            json body{{"subject", require_str(a, "subject")},
                      {"project", require_str(a, "project")},
                      {"scopes", a.at("scopes")},
                      {"ttl_seconds", a.at("ttl_seconds")}};
            if (a.contains("mfa")) body["mfa"] = a["mfa"];
            if (a.contains("max_enclave")) body["max_enclave"] = a["max_enclave"];
            auto resp = http_json("POST", "/v1/tokens", token_for(a), &body);
            tokens_[name] = resp.at("token").get<std::string>();
            r.output = json{{"name", name}, {"token_id", resp.at("token_id")}};
            return;
        }
        if (st.action == "load_policies") {
            if (!a.contains("document") || !a["document"].is_object())
                parse_fail("load_policies needs a 'document' object");
            json doc = a["document"];
            r.output = http_json("POST", "/v1/policies", token_for(a), &doc);
            return;
        }
        if (st.action == "add_template") {
            if (!a.contains("template") || !a["template"].is_object())
                parse_fail("add_template needs a 'template' object");
            json body = a["template"];
            r.output = http_json("POST", "/v1/templates", token_for(a), &body);
            return;
        }
        if (st.action == "add_reservation") {
            json body{{"project", require_str(a, "project")},
                      {"start", p_.start_seconds + require_int(a, "start")},
                      {"end", p_.start_seconds + require_int(a, "end")},
                      {"node_cap", a.at("node_cap")}};
            if (a.contains("elevated_tier")) body["elevated_tier"] = a["elevated_tier"];
            auto resp = http_json("POST", "/v1/reservations", token_for(a), &body);
            bool approve = a.value("approve", true);
            if (resp.value("status", "") == "pending-approval" && approve) {
                std::string rid = resp.at("reservation_id").get<std::string>();
                resp = http_json("POST", "/v1/reservations/" + rid + "/approve", token_for(a),
                                 nullptr);
            }
            r.output = resp;
            return;
        }
        if (st.action == "submit_job") {
            json body = job_body(a);
            auto resp = http_json("POST", "/v1/jobs", token_for(a), &body);
            std::string id = resp.at("job_id").get<std::string>();
            if (a.contains("store_as")) jobs_[require_str(a, "store_as")] = id;
            r.output = json{{"job_id", id}};
            return;
        }
        if (st.action == "submit_batch") {
            int64_t count = require_int(a, "count");
            if (count < 1) parse_fail("submit_batch count must be positive");
            json ids = json::array();
            for (int64_t i = 0; i < count; ++i) {
                json body = job_body(a);
                auto resp = http_json("POST", "/v1/jobs", token_for(a), &body);
                ids.push_back(resp.at("job_id"));
            }
            r.output = json{{"count", count}, {"job_ids", std::move(ids)}};
            return;
        }
        if (st.action == "cancel_job") {
            std::string id = job_ref(require_str(a, "job_id"));
            r.output = http_json("DELETE", "/v1/jobs/" + id, token_for(a), nullptr);
            return;
        }
        if (st.action == "provision_stream") {
            std::string name = require_str(a, "name");
            json body{{"template_id", require_str(a, "template_id")},
                      {"internal_target", require_str(a, "internal_target")}};
            if (a.contains("buffer_capacity_bytes"))
                body["buffer_capacity_bytes"] = a["buffer_capacity_bytes"];
            auto resp = http_json("POST", "/v1/streams", token_for(a), &body);
            uint32_t id = resp.at("channel_id").get<uint32_t>();
            channels_[name] = id;
            r.output = json{{"name", name},
                            {"channel_id", id},
                            {"template_id", resp.at("template_id")},
                            {"state", resp.at("state")}};
            return;
        }
        if (st.action == "start_producer") {
            start_producer(a, r);
            return;
        }
        if (st.action == "start_consumer") {
            start_consumer(a, r);
            return;
        }
        if (st.action == "await_task") {
            await_task(require_str(a, "task"), r);
            return;
        }
        if (st.action == "teardown_stream") {
            uint32_t id = channel_ref(require_str(a, "channel"));
            r.output = http_json("DELETE", "/v1/streams/" + std::to_string(id), token_for(a),
                                 nullptr);
            return;
        }
        if (st.action == "set_profile") {
            json body{{"profile", require_str(a, "name")}};
            r.output = http_json("PUT", "/v1/profile", token_for(a), &body);
            return;
        }
        parse_fail("unknown action '" + st.action + "'");
    }

    static std::string require_str(const json& a, const char* key) {
        if (!a.contains(key) || !a[key].is_string())
            parse_fail(std::string("missing string arg '") + key + "'");
        return a[key].get<std::string>();
    }

    static int64_t require_int(const json& a, const char* key) {
        if (!a.contains(key) || !a[key].is_number_integer())
            parse_fail(std::string("missing integer arg '") + key + "'");
        return a[key].get<int64_t>();
    }

    static json job_body(const json& a) {
        json body = json::object();
        for (const char* key :
             {"job_id", "project", "nodes", "walltime_seconds", "qos", "depends_on"})
            if (a.contains(key)) body[key] = a[key];
        return body;
    }

    void start_producer(const json& a, StepResult& r) {
        std::string name = require_str(a, "name");
        if (producers_.count(name) || consumers_.count(name))
            parse_fail("task '" + name + "' already exists");
        ProducerConfig cfg;
        cfg.gateway_url = gateway_url();
        cfg.token = token_for(a);
        cfg.topic = a.value("topic", std::string("data"));
        cfg.message_bytes = a.value("message_bytes", int64_t{1024});
        cfg.rate_per_s = a.value("rate_per_s", 10.0);
        cfg.duration_seconds = a.value("duration_seconds", 1.0);
        cfg.seed = a.value("seed", uint64_t{1});
        if (a.contains("channel")) {
            cfg.channel_id = channel_ref(require_str(a, "channel"));
        } else {
            cfg.template_id = require_str(a, "template_id");
            cfg.internal_target = require_str(a, "internal_target");
        }

        auto task = std::make_unique<ProducerTask>();
        ProducerTask* t = task.get();
        t->th = std::thread([this, t, cfg]() {
            try {
                t->summary = run_producer(cfg, clock_, &t->progress);
            } catch (const std::exception& e) {
                t->error = e.what();
            }
            t->done.store(true);
        });
        producers_[name] = std::move(task);

        // Provisioning happens synchronously at task start; surface its
        // outcome as this step's result so later steps can rely on the
        // channel existing.
        using namespace std::chrono;
        auto deadline = steady_clock::now() + seconds(15);
        while (!t->progress.provisioned.load() && !t->done.load()) {
            if (steady_clock::now() > deadline)
                throw Error(Errc::IO_ERROR, "producer '" + name + "' did not start");
            std::this_thread::sleep_for(milliseconds(1));
        }
        if (!t->progress.provisioned.load()) {
            r.ok = false;
            r.error = t->error;
            return;
        }
        uint32_t id = t->progress.channel_id.load();
        channels_[a.value("store_channel_as", name)] = id;
        r.output = json{{"name", name}, {"channel_id", id}};
    }

    void start_consumer(const json& a, StepResult& r) {
        std::string name = require_str(a, "name");
        if (producers_.count(name) || consumers_.count(name))
            parse_fail("task '" + name + "' already exists");
        ConsumerConfig cfg;
        cfg.gateway_url = gateway_url();
        cfg.token = token_for(a);
        cfg.channel_id = channel_ref(require_str(a, "channel"));
        cfg.topic = a.value("topic", std::string("data"));
        cfg.expected_count = require_int(a, "expected_count");
        cfg.idle_timeout_ms = a.value("idle_timeout_ms", 15000);

        auto task = std::make_unique<ConsumerTask>();
        ConsumerTask* t = task.get();
        t->th = std::thread([t, cfg]() {
            try {
                t->summary = run_consumer(cfg, &t->progress);
            } catch (const std::exception& e) {
                t->error = e.what();
            }
            t->done.store(true);
        });
        consumers_[name] = std::move(task);

        // Hold the step until the subscription is live so a producer started
        // in the same tick cannot publish past it.
        using namespace std::chrono;
        auto deadline = steady_clock::now() + seconds(15);
        while (!t->progress.subscribed.load() && !t->done.load()) {
            if (steady_clock::now() > deadline)
                throw Error(Errc::IO_ERROR, "consumer '" + name + "' did not subscribe");
            std::this_thread::sleep_for(milliseconds(1));
        }
        if (!t->progress.subscribed.load()) {
            r.ok = false;
            r.error = t->error;
            return;
        }
        r.output = json{{"name", name}, {"channel_id", cfg.channel_id}};
    }

    void await_task(const std::string& name, StepResult& r) {
        if (auto it = producers_.find(name); it != producers_.end()) {
            ProducerTask& t = *it->second;
            if (!wait_flag(t.done, 120000))
                throw Error(Errc::IO_ERROR, "task '" + name + "' did not finish");
            if (t.th.joinable()) t.th.join();
            if (!t.error.empty()) {
                r.ok = false;
                r.error = t.error;
                return;
            }
            r.output = json{{"task", name},
                            {"channel_id", t.summary.channel_id},
                            {"sent", t.summary.sent},
                            {"rejected", t.summary.rejected},
                            {"achieved_rate", t.summary.achieved_rate},
                            {"checksum", t.summary.checksum}};
            return;
        }
        if (auto it = consumers_.find(name); it != consumers_.end()) {
            ConsumerTask& t = *it->second;
            if (!wait_flag(t.done, 120000))
                throw Error(Errc::IO_ERROR, "task '" + name + "' did not finish");
            if (t.th.joinable()) t.th.join();
            if (!t.error.empty()) {
                r.ok = false;
                r.error = t.error;
                return;
            }
            r.output = json{{"task", name},
                            {"received", t.summary.received},
                            {"checksum", t.summary.checksum},
                            {"complete", t.summary.complete},
                            {"closed_early", t.summary.closed_early}};
            return;
        }
        parse_fail("unknown task '" + name + "'");
    }

    // -------------------------------------------------------------- metrics

    json resolve_metric(const std::string& path) {
        auto parts = split_path(path);
        const std::string& root = parts[0];

        if (root == "time") {
            if (parts.size() == 2 && parts[1] == "seconds")
                return clock_.now_seconds() - p_.start_seconds;
            parse_fail("unknown metric '" + path + "'");
        }
        if (root == "gateway") {
            if (parts.size() == 2 && parts[1] == "requests_total")
                return gw_->requests_total();
            parse_fail("unknown metric '" + path + "'");
        }
        if (root == "audit") {
            if (parts.size() != 2) parse_fail("unknown metric '" + path + "'");
            if (parts[1] == "count") return gw_->audit().appended_count();
            if (parts[1] == "allow_count" || parts[1] == "deny_count") {
                gateway::AuditFilter f;
                f.verdict = parts[1] == "allow_count" ? "allow" : "deny";
                return gw_->audit().query(f).size();
            }
            parse_fail("unknown metric '" + path + "'");
        }
        if (root == "scheduler") {
            if (parts.size() < 2) parse_fail("unknown metric '" + path + "'");
            int64_t now = clock_.now_seconds();
            return gw_->with_scheduler([&](sched::Scheduler& s) -> json {
                gw_->pump_scheduler(s, now);
                auto m = s.metrics(now);
                if (parts[1] == "utilization_busy") return m.utilization_busy;
                if (parts[1] == "utilization_useful") return m.utilization_useful;
                if (parts[1] == "preemption_count") return m.preemption_count;
                if (parts[1] == "lost_node_seconds") return m.lost_node_seconds;
                if (parts[1] == "mean_wait" && parts.size() == 3) {
                    auto it = m.mean_wait_by_tier.find(parts[2]);
                    return it == m.mean_wait_by_tier.end() ? 0.0 : it->second;
                }
                if (parts[1] == "jobs") return s.jobs().size();
                if (parts[1] == "jobs_running") {
                    size_t running = 0;
                    for (const auto& [id, job] : s.jobs())
                        if (job.phase == sched::Phase::running) ++running;
                    return running;
                }
                parse_fail("unknown metric '" + path + "'");
            });
        }
        if (root == "job") {
            if (parts.size() != 3) parse_fail("unknown metric '" + path + "'");
            std::string id = job_ref(parts[1]);
            int64_t now = clock_.now_seconds();
            return gw_->with_scheduler([&](sched::Scheduler& s) -> json {
                gw_->pump_scheduler(s, now);
                const auto* job = s.find_job(id);
                if (!job) parse_fail("unknown metric '" + path + "': no job " + id);
                const std::string& f = parts[2];
                if (f == "phase") return sched::phase_name(job->phase);
                if (f == "nodes") return job->spec.nodes_requested;
                if (f == "preempt_count") return job->preempt_count;
                if (f == "elevated") return job->elevated;
                if (f == "submit_time") return job->submit_time - p_.start_seconds;
                if (f == "first_started_at")
                    return job->first_started_at < 0 ? int64_t{-1}
                                                     : job->first_started_at - p_.start_seconds;
                if (f == "wait_seconds")
                    return job->first_started_at < 0
                               ? int64_t{-1}
                               : job->first_started_at - job->submit_time;
                parse_fail("unknown metric '" + path + "'");
            });
        }
        if (root == "channel") {
            if (parts.size() != 3) parse_fail("unknown metric '" + path + "'");
            uint32_t id = channel_ref(parts[1]);
            auto info = gw_->broker().info(id);
            const std::string& f = parts[2];
            if (f == "state") return dsn::channel_state_name(info.state);
            if (f == "messages") return info.counters.messages;
            if (f == "drops") return info.counters.drops;
            if (f == "bytes_in") return info.counters.bytes_in;
            if (f == "bytes_out") return info.counters.bytes_out;
            parse_fail("unknown metric '" + path + "'");
        }
        if (root == "producer" || root == "consumer") {
            if (parts.size() != 3) parse_fail("unknown metric '" + path + "'");
            StepResult scratch;
            scratch.ok = true;
            await_task(parts[1], scratch);
            if (!scratch.ok)
                return json("task-error: " + scratch.error);
            const std::string& f = parts[2];
            if (!scratch.output.contains(f))
                parse_fail("unknown metric '" + path + "'");
            return scratch.output[f];
        }
        parse_fail("unknown metric '" + path + "'");
    }

    static std::string render_value(const json& v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
    }

    std::string render_assert(const Assertion& a) {
        return a.metric + " " + a.op + " " +
               (a.value_from.empty() ? render_value(a.value) : a.value_from);
    }

    AssertionResult eval_assert(const Assertion& a) {
        json lhs = resolve_metric(a.metric);
        json rhs = a.value_from.empty() ? a.value : resolve_metric(a.value_from);
        AssertionResult out;
        out.text = render_assert(a);
        out.observed = render_value(lhs);
        double ln = 0, rn = 0;
        if (as_number(lhs, &ln) && as_number(rhs, &rn)) {
            if (a.op == "==")
                out.pass = ln == rn;
            else if (a.op == "!=")
                out.pass = ln != rn;
            else if (a.op == ">=")
                out.pass = ln >= rn;
            else if (a.op == "<=")
                out.pass = ln <= rn;
            else if (a.op == ">")
                out.pass = ln > rn;
            else
                out.pass = ln < rn;
            return out;
        }
        if (lhs.is_string() && rhs.is_string()) {
            if (a.op == "==")
                out.pass = lhs == rhs;
            else if (a.op == "!=")
                out.pass = lhs != rhs;
            else
                out.pass = false;  // no ordering on strings
            return out;
        }
        out.pass = false;  // incomparable types
        return out;
    }

    Parsed p_;
    SimClock clock_;
    gateway::Config cfg_;
    std::unique_ptr<gateway::Gateway> gw_;
    std::unique_ptr<gateway::GatewayServer> server_;
    uint16_t port_ = 0;
    std::map<std::string, std::string> tokens_;
    std::map<std::string, uint32_t> channels_;
    std::map<std::string, std::string> jobs_;
    std::map<std::string, std::unique_ptr<ProducerTask>> producers_;
    std::map<std::string, std::unique_ptr<ConsumerTask>> consumers_;
};

}  // namespace

json ScenarioReport::to_json() const {
    json steps_arr = json::array();
    for (const auto& s : steps) {
        json sj{{"at", s.at}, {"action", s.action}, {"ok", s.ok}};
        if (!s.error.empty()) sj["error"] = s.error;
        if (!s.output.is_null()) sj["output"] = s.output;
        if (!s.assertions.empty()) {
            json arr = json::array();
            for (const auto& ar : s.assertions)
                arr.push_back(json{{"assert", ar.text}, {"observed", ar.observed},
                                   {"pass", ar.pass}});
            sj["assertions"] = std::move(arr);
        }
        steps_arr.push_back(std::move(sj));
    }
    return json{{"name", name}, {"pass", pass}, {"steps", std::move(steps_arr)}};
}

ScenarioReport run_scenario_text(const std::string& document_text,
                                 const std::string& default_name) {
    Runner runner(parse_scenario(document_text, default_name));
    return runner.run();
}

ScenarioReport run_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IO_ERROR, "cannot read scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string name = path;
    if (auto pos = name.find_last_of('/'); pos != std::string::npos) name = name.substr(pos + 1);
    if (auto pos = name.rfind(".json"); pos != std::string::npos) name = name.substr(0, pos);
    return run_scenario_text(ss.str(), name);
}

}  // namespace scimesh::scenario
