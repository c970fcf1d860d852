#include "scimesh/scenario/stream_tasks.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "scimesh/dsn/node.hpp"
#include "scimesh/errors.hpp"
#include "scimesh/util.hpp"

namespace scimesh::scenario {

using nlohmann::json;

Endpoint parse_endpoint(const std::string& url) {
    std::string rest = url;
    if (auto pos = rest.find("://"); pos != std::string::npos) rest = rest.substr(pos + 3);
    if (auto pos = rest.find('/'); pos != std::string::npos) rest = rest.substr(0, pos);
    auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon + 1 >= rest.size())
        throw Error(Errc::INVALID_ARGUMENT, "gateway url needs host:port: " + url);
    Endpoint ep;
    ep.host = rest.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(Errc::INVALID_ARGUMENT, "bad port in gateway url: " + url);
    }
    if (port < 1 || port > 65535)
        throw Error(Errc::INVALID_ARGUMENT, "bad port in gateway url: " + url);
    ep.port = static_cast<uint16_t>(port);
    return ep;
}

namespace {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Re-raises a gateway error body as the typed error it carried.
[[noreturn]] void throw_gateway_error(const httplib::Result& res, const std::string& what) {
    if (!res)
        throw Error(Errc::IO_ERROR, what + ": no response from gateway");
    std::string name = "IO_ERROR";
    std::string detail = what + ": http " + std::to_string(res->status);
    try {
        auto body = json::parse(res->body);
        if (body.contains("error")) name = body["error"].get<std::string>();
        if (body.contains("detail")) detail = body["detail"].get<std::string>();
    } catch (const std::exception&) {
    }
    throw Error(errc_from_name(name).value_or(Errc::IO_ERROR), detail);
}

httplib::Headers bearer(const std::string& token) {
    return {{"Authorization", "Bearer " + token}};
}

// Deterministic payload stream: one generator per producer, drawn 8 bytes
// at a time so message boundaries don't affect the byte sequence.
class PayloadStream {
  public:
    explicit PayloadStream(uint64_t seed) : rng_(seed) {}

    std::string next(int64_t n) {
        std::string out;
        out.reserve(static_cast<size_t>(n));
        while (static_cast<int64_t>(out.size()) < n) {
            uint64_t w = rng_();
            for (int i = 0; i < 8 && static_cast<int64_t>(out.size()) < n; ++i)
                out.push_back(static_cast<char>((w >> (8 * i)) & 0xff));
        }
        return out;
    }

  private:
    std::mt19937_64 rng_;
};

}  // namespace

ProducerSummary run_producer(const ProducerConfig& cfg, Clock& clock,
                             ProducerProgress* progress) {
    if (cfg.rate_per_s <= 0.0)
        throw Error(Errc::INVALID_ARGUMENT, "rate must be positive");
    if (cfg.message_bytes < 1)
        throw Error(Errc::INVALID_ARGUMENT, "message size must be at least 1 byte");
    if (cfg.duration_seconds < 0.0)
        throw Error(Errc::INVALID_ARGUMENT, "duration must be non-negative");

    auto ep = parse_endpoint(cfg.gateway_url);
    httplib::Client http(ep.host, ep.port);
    http.set_connection_timeout(5, 0);
    http.set_read_timeout(15, 0);

    ProducerSummary out;
    int64_t max_message_bytes = 0;
    if (cfg.channel_id) {
        auto res = http.Get("/v1/streams/" + std::to_string(*cfg.channel_id),
                            bearer(cfg.token));
        if (!res || res->status != 200) throw_gateway_error(res, "stream lookup");
        auto info = json::parse(res->body);
        out.channel_id = info["channel_id"].get<uint32_t>();
        out.data_port = info["data_port"].get<uint16_t>();
        max_message_bytes = info["max_message_bytes"].get<int64_t>();
    } else {
        json body{{"template_id", cfg.template_id},
                  {"internal_target", cfg.internal_target}};
        auto res = http.Post("/v1/streams", bearer(cfg.token), body.dump(),
                             "application/json");
        if (!res || res->status != 200) throw_gateway_error(res, "stream provision");
        auto info = json::parse(res->body);
        out.channel_id = info["channel_id"].get<uint32_t>();
        out.data_port = info["data_port"].get<uint16_t>();
        max_message_bytes = info["max_message_bytes"].get<int64_t>();
    }
    if (progress) {
        progress->channel_id.store(out.channel_id);
        progress->provisioned.store(true);
    }

    if (cfg.message_bytes > max_message_bytes)
        throw Error(Errc::MESSAGE_TOO_LARGE,
                    "configured message size " + std::to_string(cfg.message_bytes) +
                        " exceeds channel limit " + std::to_string(max_message_bytes));

    auto client = dsn::L7Client::connect(ep.host, out.data_port, out.channel_id, cfg.token);

    const int64_t total = std::llround(cfg.rate_per_s * cfg.duration_seconds);
    const double interval_ms = 1000.0 / cfg.rate_per_s;
    const int64_t start_ms = clock.now_millis();
    PayloadStream payloads(cfg.seed);
    util::Fnv1a64 fnv;

    for (int64_t i = 0; i < total; ++i) {
        int64_t due = start_ms + std::llround(static_cast<double>(i) * interval_ms);
        if (progress) progress->next_due_ms.store(due);
        clock.sleep_until_millis(due);
        std::string body = payloads.next(cfg.message_bytes);
        client.publish(cfg.topic, body);
        fnv.update(body);
        ++out.sent;
        if (auto err = client.poll_error(0)) {
            ++out.rejected;
            --out.sent;
            (void)err;
        }
    }
    // Sample the end time before publishing completion: once next_due_ms goes
    // to INT64_MAX a scenario runner is free to advance a simulated clock past
    // this task, which would skew the rate.
    const int64_t end_ms = clock.now_millis();
    if (progress) progress->next_due_ms.store(INT64_MAX);

    // Catch stragglers: an ERR for the last few publishes may still be in
    // flight when the loop ends.
    while (auto err = client.poll_error(20)) {
        ++out.rejected;
        if (out.sent > 0) --out.sent;
        (void)err;
    }
    client.close();

    double elapsed_s = static_cast<double>(end_ms - start_ms) / 1000.0;
    if (elapsed_s <= 0.0) elapsed_s = cfg.duration_seconds > 0.0 ? cfg.duration_seconds : 1.0;
    out.achieved_rate = static_cast<double>(out.sent) / elapsed_s;
    out.checksum = hex64(fnv.digest());
    return out;
}

ConsumerSummary run_consumer(const ConsumerConfig& cfg, ConsumerProgress* progress) {
    auto ep = parse_endpoint(cfg.gateway_url);
    httplib::Client http(ep.host, ep.port);
    http.set_connection_timeout(5, 0);
    http.set_read_timeout(15, 0);

    auto res = http.Get("/v1/streams/" + std::to_string(cfg.channel_id), bearer(cfg.token));
    if (!res || res->status != 200) throw_gateway_error(res, "stream lookup");
    auto info = json::parse(res->body);
    auto data_port = info["data_port"].get<uint16_t>();

    auto client = dsn::L7Client::connect(ep.host, data_port, cfg.channel_id, cfg.token);
    client.subscribe(cfg.topic);
    if (progress) progress->subscribed.store(true);

    ConsumerSummary out;
    util::Fnv1a64 fnv;
    while (out.received < cfg.expected_count) {
        auto msg = client.next_message(cfg.idle_timeout_ms);
        if (!msg) {
            out.closed_early = client.finished();
            break;
        }
        fnv.update(*msg->body);
        ++out.received;
    }
    out.checksum = hex64(fnv.digest());
    out.complete = out.received >= cfg.expected_count;
    client.close();
    return out;
}

}  // namespace scimesh::scenario
