#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scimesh/clock.hpp"
#include "scimesh/dsn/frame.hpp"
#include "scimesh/errors.hpp"

namespace scimesh::dsn {

enum class ChannelMode { gateway_l7, router_l4 };
std::string mode_name(ChannelMode m);
ChannelMode mode_from_name(const std::string& name);  // throws INVALID_TEMPLATE

enum class OverflowPolicy { block, drop_newest };
std::string overflow_name(OverflowPolicy p);
OverflowPolicy overflow_from_name(const std::string& name);  // throws INVALID_TEMPLATE

struct ChannelTemplate {
    std::string template_id;
    ChannelMode mode = ChannelMode::gateway_l7;
    std::vector<std::string> allowed_external_cidrs;
    std::vector<std::string> allowed_internal_targets;  // "host:port"
    int64_t buffer_capacity_bytes = 0;
    OverflowPolicy overflow_policy = OverflowPolicy::block;  // lossless unless opted out
    int64_t max_message_bytes = 0;                           // L7 only

    nlohmann::json to_json() const;
    static ChannelTemplate from_json(const nlohmann::json& j);  // throws INVALID_TEMPLATE

    /// Enforces the structural invariants; throws INVALID_TEMPLATE.
    void validate() const;
};

enum class ChannelState { provisioned, active, closed };
std::string channel_state_name(ChannelState s);

struct ChannelCounters {
    // Wire-byte counters: every DATA frame in/out for L7, raw relayed bytes
    // for L4. Control frames (AUTH/ACK/SUB/ERR/CLOSE) are not data traffic.
    int64_t bytes_in = 0;
    int64_t bytes_out = 0;
    int64_t messages = 0;
    int64_t drops = 0;
};

// Body-byte ledger for the shared channel buffer. At any quiescent point
// attempted == consumed + occupancy + dropped (dropped covers both messages
// refused at admission and messages discarded undelivered by close()).
struct BufferAccounting {
    int64_t attempted_body_bytes = 0;
    int64_t admitted_body_bytes = 0;
    int64_t consumed_body_bytes = 0;  // counted once per message at dispatch
    int64_t dropped_body_bytes = 0;
    int64_t occupancy_bytes = 0;
};

struct Message {
    std::string topic;
    std::shared_ptr<const std::string> body;  // shared across fan-out copies
};

/// A consumer's registration on a hub. Delivered messages queue here until
/// the consumer polls them (or the session writes them to its socket).
class Subscription {
  public:
    /// Blocks up to `timeout`; nullopt on timeout, or immediately once the
    /// hub has closed and the queue is drained.
    std::optional<Message> poll(std::chrono::milliseconds timeout);

    /// True once no further messages can arrive (hub closed, queue empty).
    bool finished();

  private:
    friend class ChannelHub;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Message> q_;
    std::set<std::string> topics_;
    bool closed_ = false;
};

/// Per-channel data-plane state machine: per-topic FIFO queues sharing one
/// byte budget, fan-out to all current subscribers, and the two overflow
/// behaviors. Producers and consumers may run on any threads.
///
/// A published message occupies the shared buffer until at least one
/// subscriber for its topic exists; dispatch then moves it (once, whatever
/// the fan-out) out of the buffer and into subscriber queues. Delivery is
/// at-most-once: a subscriber that disappears loses whatever it had not
/// polled yet.
class ChannelHub {
  public:
    ChannelHub(uint32_t channel_id, ChannelMode mode, int64_t capacity_bytes,
               int64_t max_message_bytes, OverflowPolicy policy);

    enum class PublishResult { admitted, dropped };

    /// Publishes one message. Under the block policy this stalls until buffer
    /// space frees or the channel closes. Throws MESSAGE_TOO_LARGE for
    /// oversized bodies or topics, CHANNEL_CLOSED after close().
    PublishResult publish(const std::string& topic, std::string body);

    std::shared_ptr<Subscription> subscribe(const std::vector<std::string>& topics);

    /// Widens an existing subscription (sessions subscribe incrementally).
    void add_topics(const std::shared_ptr<Subscription>& sub,
                    const std::vector<std::string>& topics);

    void unsubscribe(const std::shared_ptr<Subscription>& sub);

    /// Wakes all blocked producers and finishes all subscriptions.
    void close();
    bool is_closed() const;

    void add_bytes_in(int64_t n);   // L4 relay accounting
    void add_bytes_out(int64_t n);  // L4 relay accounting

    uint32_t channel_id() const { return channel_id_; }
    ChannelMode mode() const { return mode_; }
    int64_t capacity_bytes() const { return capacity_bytes_; }
    int64_t max_message_bytes() const { return max_message_bytes_; }
    OverflowPolicy overflow_policy() const { return policy_; }

    ChannelCounters counters() const;
    BufferAccounting buffer_accounting() const;

    /// True when the body-byte ledger balances (see BufferAccounting).
    bool conservation_holds() const;

  private:
    void dispatch_topic_locked(const std::string& topic);

    const uint32_t channel_id_;
    const ChannelMode mode_;
    const int64_t capacity_bytes_;
    const int64_t max_message_bytes_;
    const OverflowPolicy policy_;

    mutable std::mutex mu_;
    std::condition_variable space_cv_;
    std::map<std::string, std::deque<Message>> queues_;
    std::vector<std::shared_ptr<Subscription>> subs_;
    bool closed_ = false;

    ChannelCounters counters_;
    BufferAccounting buf_;
};

struct ChannelInfo {
    uint32_t channel_id = 0;
    std::string template_id;
    std::string owner_project;
    ChannelState state = ChannelState::provisioned;
    ChannelMode mode = ChannelMode::gateway_l7;
    std::string internal_target;
    uint16_t data_port = 0;  // 0 until a data plane opens the port
    int64_t buffer_capacity_bytes = 0;
    int64_t max_message_bytes = 0;
    OverflowPolicy overflow_policy = OverflowPolicy::block;
    ChannelCounters counters;

    nlohmann::json to_json() const;
};

struct ProvisionRequest {
    std::string template_id;
    std::string internal_target;
    std::optional<int64_t> buffer_capacity_bytes;  // defaults to template cap
};

struct ThroughputStats {
    double bytes_per_second = 0.0;
    double messages_per_second = 0.0;
};

/// Control plane: template registry and channel lifecycle. Owns the hubs;
/// data planes (in-process tests, the socket node, the Python bindings) get
/// at them through hub(). Never touches payload bytes itself.
class Broker {
  public:
    explicit Broker(Clock& clock);

    // -- templates (admin surface)
    void add_template(const ChannelTemplate& t);        // validates; INVALID_TEMPLATE on dup
    void load_templates_json(const std::string& text);  // {"templates": [...]}
    ChannelTemplate get_template(const std::string& id) const;  // UNKNOWN_TEMPLATE
    std::vector<ChannelTemplate> templates() const;

    // -- channel lifecycle
    ChannelInfo provision(const ProvisionRequest& req, const std::string& owner_project,
                          bool has_provision_scope);
    ChannelInfo info(uint32_t channel_id) const;  // UNKNOWN_CHANNEL
    std::vector<ChannelInfo> list() const;

    /// Marks the channel active on a concrete data port (socket node calls
    /// this after binding its listener).
    void activate(uint32_t channel_id, uint16_t data_port);

    std::shared_ptr<ChannelHub> hub(uint32_t channel_id) const;  // UNKNOWN_CHANNEL

    /// Closes the hub (and, via the closer hook, any sockets), freezes and
    /// returns the final counters, and retires the id. Owner or admin only.
    ChannelCounters teardown(uint32_t channel_id, const std::string& project, bool admin);

    /// Trailing-window rates from monotonic counters. Each call contributes a
    /// sample point; rates are measured against the newest sample at or
    /// before the window start.
    ThroughputStats throughput(uint32_t channel_id, double window_seconds);

    /// Hook invoked during teardown before counters freeze, so a socket data
    /// plane can close listeners/sessions. Runs outside the broker lock.
    void set_channel_closer(std::function<void(uint32_t)> closer);

    /// Connect-time L4 admission: peer must fall in the template allowlist.
    static bool l4_peer_allowed(const ChannelTemplate& t, const std::string& peer_ip);

  private:
    struct ChannelRec {
        ChannelInfo info;
        ChannelTemplate tmpl;
        std::shared_ptr<ChannelHub> hub;
        struct Sample {
            int64_t t_millis;
            int64_t bytes_in;
            int64_t messages;
        };
        std::deque<Sample> samples;
    };

    ChannelRec& rec(uint32_t channel_id);              // UNKNOWN_CHANNEL
    const ChannelRec& rec(uint32_t channel_id) const;  // UNKNOWN_CHANNEL

    Clock& clock_;
    mutable std::mutex mu_;
    std::map<std::string, ChannelTemplate> templates_;
    std::map<uint32_t, ChannelRec> channels_;
    uint32_t next_channel_id_ = 1;
    std::function<void(uint32_t)> closer_;
};

}  // namespace scimesh::dsn
