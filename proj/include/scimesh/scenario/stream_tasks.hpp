#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>

#include "scimesh/clock.hpp"

namespace scimesh::scenario {

// host/port split of a gateway base URL ("http://127.0.0.1:8080",
// "127.0.0.1:8080"). Throws INVALID_ARGUMENT when the port is missing.
struct Endpoint {
    std::string host;
    uint16_t port = 0;
};
Endpoint parse_endpoint(const std::string& url);

struct ProducerConfig {
    std::string gateway_url;
    std::string token;
    std::string template_id;
    std::string internal_target;          // required when provisioning
    std::optional<uint32_t> channel_id;   // reuse an existing channel instead
    std::string topic = "data";
    int64_t message_bytes = 1024;
    double rate_per_s = 10.0;
    double duration_seconds = 1.0;
    uint64_t seed = 1;
};

struct ProducerSummary {
    uint32_t channel_id = 0;
    uint16_t data_port = 0;
    int64_t sent = 0;
    int64_t rejected = 0;     // ERR frames observed while publishing
    double achieved_rate = 0.0;
    std::string checksum;     // fnv1a-64 over published bodies, 16 hex chars
};

// Optional live view for the scenario runner: which simulated instant the
// producer sleeps toward (INT64_MAX once pacing is finished), and the
// channel id as soon as provisioning succeeds.
struct ProducerProgress {
    std::atomic<int64_t> next_due_ms{INT64_MIN};
    std::atomic<uint32_t> channel_id{0};
    std::atomic<bool> provisioned{false};
};

/// Provisions a channel through the gateway (unless cfg.channel_id is set),
/// then publishes seeded payloads paced against `clock`:
/// message i is due at start + i/rate, for rate*duration messages total.
/// Gateway refusals and an oversize message_bytes (checked before any
/// publish) surface as Error.
ProducerSummary run_producer(const ProducerConfig& cfg, Clock& clock,
                             ProducerProgress* progress = nullptr);

struct ConsumerConfig {
    std::string gateway_url;
    std::string token;
    uint32_t channel_id = 0;
    std::string topic = "data";
    int64_t expected_count = 0;
    int idle_timeout_ms = 15000;  // real-time guard per message
};

struct ConsumerSummary {
    int64_t received = 0;
    std::string checksum;       // fnv1a-64 over bodies in arrival order
    bool closed_early = false;  // server CLOSE before expected_count
    bool complete = false;      // received >= expected_count
};

// Lets the scenario runner hold producers back until the subscription is
// live — the hub does not replay messages published before it.
struct ConsumerProgress {
    std::atomic<bool> subscribed{false};
};

/// Subscribes to the channel's topic and receives until expected_count
/// messages arrived, the server closed the channel, or no message showed up
/// within idle_timeout_ms.
ConsumerSummary run_consumer(const ConsumerConfig& cfg, ConsumerProgress* progress = nullptr);

}  // namespace scimesh::scenario
