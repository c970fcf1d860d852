#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "scimesh/auth/tokens.hpp"
#include "scimesh/clock.hpp"
#include "scimesh/dsn/broker.hpp"
#include "scimesh/dsn/frame.hpp"
#include "scimesh/util.hpp"

namespace scimesh::dsn {

/// Decides whether an L7 AUTH payload (a bearer token) may attach to a
/// channel owned by `owner_project`. On refusal fills `err` with the
/// "NAME: detail" text for the ERR frame.
using L7Authenticator = std::function<bool(const std::string& token,
                                           const std::string& owner_project, std::string* err)>;

/// Standard authenticator: token must validate, belong to the owning
/// project, and carry streams.read or any jobs.* scope.
L7Authenticator make_token_authenticator(auth::TokenAuthority& authority, Clock& clock);

// -- small socket helpers shared by the node, clients, and test harnesses

int tcp_connect(const std::string& host, uint16_t port);  // throws IO_ERROR
bool send_all(int fd, const void* data, size_t len);
void close_fd(int fd);

/// Data plane: one listener per opened channel. gateway_l7 channels speak
/// the frame protocol (AUTH, then SUB/DATA) with per-connection token
/// checks; router_l4 channels check the peer address once at accept and
/// then relay bytes opaquely to the channel's internal target.
class StreamNode {
  public:
    StreamNode(Broker& broker, L7Authenticator authenticator);
    ~StreamNode();

    StreamNode(const StreamNode&) = delete;
    StreamNode& operator=(const StreamNode&) = delete;

    /// Binds 127.0.0.1 (port 0 = ephemeral), starts the accept loop, and
    /// marks the channel active at the bound port. Returns the port.
    uint16_t open_data_port(uint32_t channel_id, uint16_t port = 0);

    /// Sends CLOSE to live L7 sessions, closes all sockets for the channel,
    /// and joins its threads. Idempotent. (Broker::teardown reaches this
    /// through the channel-closer hook.)
    void close_channel(uint32_t channel_id);

    void stop();  // close_channel for everything still open

    size_t live_sessions(uint32_t channel_id) const;

  private:
    struct Session {
        int fd = -1;
        int target_fd = -1;  // L4 only
        std::thread reader;
        std::thread writer;
        std::mutex write_mu;
        std::shared_ptr<Subscription> sub;  // L7 only
        std::atomic<bool> dead{false};
    };

    struct Listener {
        uint32_t channel_id = 0;
        int fd = -1;
        uint16_t port = 0;
        ChannelMode mode = ChannelMode::gateway_l7;
        ChannelTemplate tmpl;
        std::string owner_project;
        std::shared_ptr<ChannelHub> hub;
        std::string target_host;
        uint16_t target_port = 0;
        std::thread accept_thread;
        std::atomic<bool> stopping{false};
        std::mutex sessions_mu;
        std::vector<std::shared_ptr<Session>> sessions;
    };

    void accept_loop(const std::shared_ptr<Listener>& ln);
    void l7_session(const std::shared_ptr<Listener>& ln, const std::shared_ptr<Session>& s);
    void l7_writer(const std::shared_ptr<Listener>& ln, const std::shared_ptr<Session>& s);
    void l4_pump(const std::shared_ptr<Listener>& ln, const std::shared_ptr<Session>& s,
                 bool inbound);
    void send_frame(const std::shared_ptr<Session>& s, const Frame& f);
    void reap_finished(Listener& ln);
    static void shutdown_session(Session& s);

    Broker& broker_;
    L7Authenticator auth_;
    mutable std::mutex mu_;
    std::map<uint32_t, std::shared_ptr<Listener>> listeners_;
};

/// Single-threaded L7 protocol client for producers, consumers, and tests.
class L7Client {
  public:
    L7Client() = default;
    ~L7Client();
    L7Client(L7Client&& other) noexcept;
    L7Client& operator=(L7Client&& other) noexcept;
    L7Client(const L7Client&) = delete;
    L7Client& operator=(const L7Client&) = delete;

    /// Connects and performs the AUTH handshake; throws the server's error
    /// (AUTH_REQUIRED and friends) if the handshake is refused.
    static L7Client connect(const std::string& host, uint16_t port, uint32_t channel_id,
                            const std::string& token);

    void subscribe(const std::string& topic);                       // waits for ACK
    void publish(const std::string& topic, const std::string& body);  // fire and forget

    /// Next DATA message; nullopt on timeout or server CLOSE (then
    /// finished() turns true). Throws on an ERR frame.
    std::optional<Message> next_message(int timeout_ms);

    /// Drains frames looking for an ERR (queued DATA is kept for
    /// next_message). nullopt if none arrived within the timeout.
    std::optional<Errc> poll_error(int timeout_ms);

    bool finished() const { return finished_; }
    void close();

  private:
    // Reads one frame; nullopt on timeout. Throws CHANNEL_CLOSED on EOF.
    std::optional<Frame> read_frame(int timeout_ms);
    [[noreturn]] static void throw_err_payload(const std::string& payload);

    int fd_ = -1;
    uint32_t channel_id_ = 0;
    std::string rbuf_;
    size_t roff_ = 0;
    bool finished_ = false;
    std::deque<Message> pending_;
};

/// Loopback byte endpoint used as the internal target in relay tests and
/// scenarios: absorbs whatever arrives (checksumming it) and optionally
/// echoes it back.
class ByteSink {
  public:
    explicit ByteSink(bool echo = false);
    ~ByteSink();

    uint16_t port() const { return port_; }
    int64_t total_bytes() const { return total_.load(); }
    uint64_t checksum() const;  // fnv1a-64 over bytes in arrival order
    void stop();

  private:
    void run();

    bool echo_;
    int fd_ = -1;
    uint16_t port_ = 0;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    std::atomic<int64_t> total_{0};
    mutable std::mutex mu_;
    util::Fnv1a64 fnv_;
    std::vector<std::thread> conns_;
};

}  // namespace scimesh::dsn
