#include "scimesh/dsn/node.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "scimesh/util.hpp"

namespace scimesh::dsn {

namespace {

constexpr size_t kIoChunk = 64 * 1024;

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

int listen_on_loopback(uint16_t port, uint16_t* bound_port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(Errc::IO_ERROR, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int err = errno;
        ::close(fd);
        throw Error(Errc::IO_ERROR, std::string("bind: ") + std::strerror(err));
    }
    if (::listen(fd, 64) != 0) {
        int err = errno;
        ::close(fd);
        throw Error(Errc::IO_ERROR, std::string("listen: ") + std::strerror(err));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    *bound_port = ntohs(addr.sin_port);
    return fd;
}

std::string peer_ip_of(int fd) {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    if (::getpeername(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return "";
    char buf[INET_ADDRSTRLEN] = {0};
    ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
    return buf;
}

// Waits for readability; 0 timeout polls once. Returns false on timeout.
bool wait_readable(int fd, int timeout_ms) {
    pollfd p{fd, POLLIN, 0};
    int rc = ::poll(&p, 1, timeout_ms);
    return rc > 0 && (p.revents & (POLLIN | POLLHUP | POLLERR));
}

}  // namespace

bool send_all(int fd, const void* data, size_t len) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            return false;
        }
        p += n;
        len -= size_t(n);
    }
    return true;
}

void close_fd(int fd) {
    if (fd >= 0) ::close(fd);
}

int tcp_connect(const std::string& host, uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(Errc::IO_ERROR, std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw Error(Errc::IO_ERROR, "unresolvable host '" + host + "'");
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int err = errno;
        ::close(fd);
        throw Error(Errc::IO_ERROR, "connect " + host + ":" + std::to_string(port) + ": " +
                                        std::strerror(err));
    }
    set_nodelay(fd);
    return fd;
}

L7Authenticator make_token_authenticator(auth::TokenAuthority& authority, Clock& clock) {
    return [&authority, &clock](const std::string& token, const std::string& owner_project,
                                std::string* err) {
        try {
            auth::Claims claims = authority.validate(token, clock.now_seconds());
            if (claims.project != owner_project) {
                *err = "AUTH_REQUIRED: token project '" + claims.project +
                       "' does not own this channel";
                return false;
            }
            for (const auto& s : claims.scopes)
                if (s == "streams.read" || s.rfind("jobs.", 0) == 0) return true;
            *err = "AUTH_REQUIRED: needs streams.read or a jobs scope";
            return false;
        } catch (const Error& e) {
            *err = "AUTH_REQUIRED: " + std::string(e.name());
            return false;
        }
    };
}

// ------------------------------------------------------------- stream node

StreamNode::StreamNode(Broker& broker, L7Authenticator authenticator)
    : broker_(broker), auth_(std::move(authenticator)) {
    broker_.set_channel_closer([this](uint32_t id) { close_channel(id); });
}

StreamNode::~StreamNode() {
    broker_.set_channel_closer(nullptr);
    stop();
}

uint16_t StreamNode::open_data_port(uint32_t channel_id, uint16_t port) {
    ChannelInfo info = broker_.info(channel_id);
    if (info.state == ChannelState::closed)
        throw Error(Errc::CHANNEL_CLOSED, std::to_string(channel_id));

    auto ln = std::make_shared<Listener>();
    ln->channel_id = channel_id;
    ln->mode = info.mode;
    ln->tmpl = broker_.get_template(info.template_id);
    ln->owner_project = info.owner_project;
    ln->hub = broker_.hub(channel_id);
    auto colon = info.internal_target.rfind(':');
    ln->target_host = info.internal_target.substr(0, colon);
    ln->target_port = uint16_t(std::stoi(info.internal_target.substr(colon + 1)));

    {
        std::lock_guard<std::mutex> lk(mu_);
        if (listeners_.count(channel_id))
            throw Error(Errc::INVALID_ARGUMENT,
                        "channel " + std::to_string(channel_id) + " already has a data port");
        ln->fd = listen_on_loopback(port, &ln->port);
        listeners_[channel_id] = ln;
    }
    ln->accept_thread = std::thread([this, ln] { accept_loop(ln); });
    broker_.activate(channel_id, ln->port);
    return ln->port;
}

void StreamNode::accept_loop(const std::shared_ptr<Listener>& ln) {
    while (!ln->stopping) {
        if (!wait_readable(ln->fd, 100)) {
            reap_finished(*ln);
            continue;
        }
        int cfd = ::accept(ln->fd, nullptr, nullptr);
        if (cfd < 0) {
            if (ln->stopping) break;
            continue;
        }
        set_nodelay(cfd);

        auto s = std::make_shared<Session>();
        s->fd = cfd;

        if (ln->mode == ChannelMode::router_l4) {
            // Allowlist check happens exactly once, at connect time.
            if (!Broker::l4_peer_allowed(ln->tmpl, peer_ip_of(cfd))) {
                ::close(cfd);
                continue;
            }
            try {
                s->target_fd = tcp_connect(ln->target_host, ln->target_port);
            } catch (const Error&) {
                ::close(cfd);
                continue;
            }
            s->reader = std::thread([this, ln, s] { l4_pump(ln, s, true); });
            s->writer = std::thread([this, ln, s] { l4_pump(ln, s, false); });
        } else {
            s->sub = ln->hub->subscribe({});
            s->reader = std::thread([this, ln, s] { l7_session(ln, s); });
            s->writer = std::thread([this, ln, s] { l7_writer(ln, s); });
        }
        {
            std::lock_guard<std::mutex> lk(ln->sessions_mu);
            ln->sessions.push_back(std::move(s));
        }
        reap_finished(*ln);
    }
}

void StreamNode::send_frame(const std::shared_ptr<Session>& s, const Frame& f) {
    std::string bytes = encode_frame(f);
    std::lock_guard<std::mutex> lk(s->write_mu);
    if (!send_all(s->fd, bytes.data(), bytes.size())) s->dead = true;
}

void StreamNode::l7_session(const std::shared_ptr<Listener>& ln,
                            const std::shared_ptr<Session>& s) {
    std::string buf;
    size_t off = 0;
    bool authed = false;

    auto fail = [&](const std::string& payload) {
        send_frame(s, Frame{FrameType::Err, 0, ln->channel_id, payload});
    };

    while (!s->dead && !ln->stopping) {
        Frame frame;
        size_t consumed = 0;
        std::string reason;
        auto st = decode_frame(reinterpret_cast<const uint8_t*>(buf.data()) + off,
                               buf.size() - off, &frame, &consumed, &reason);
        if (st == DecodeStatus::Bad) {
            fail("MALFORMED: " + reason);
            break;
        }
        if (st == DecodeStatus::NeedMore) {
            if (off > 0 && off == buf.size()) {
                buf.clear();
                off = 0;
            } else if (off > kIoChunk) {
                buf.erase(0, off);
                off = 0;
            }
            if (!wait_readable(s->fd, 100)) continue;
            size_t old = buf.size();
            buf.resize(old + kIoChunk);
            ssize_t n = ::recv(s->fd, buf.data() + old, kIoChunk, 0);
            if (n <= 0) break;  // peer gone
            buf.resize(old + size_t(n));
            continue;
        }
        off += consumed;

        if (frame.channel_id != ln->channel_id) {
            fail("MALFORMED: wrong channel id");
            break;
        }
        if (!authed) {
            if (frame.type != FrameType::Auth) {
                fail("AUTH_REQUIRED: first frame must be AUTH");
                break;
            }
            std::string err;
            if (!auth_(frame.payload, ln->owner_project, &err)) {
                fail(err);
                break;
            }
            authed = true;
            send_frame(s, Frame{FrameType::Ack, 0, ln->channel_id, "ok"});
            continue;
        }
        switch (frame.type) {
            case FrameType::Sub:
                try {
                    ln->hub->add_topics(s->sub, {frame.payload});
                    send_frame(s, Frame{FrameType::Ack, 0, ln->channel_id, frame.payload});
                } catch (const Error& e) {
                    fail(std::string(e.name()) + ": subscribe failed");
                    s->dead = true;
                }
                break;
            case FrameType::Data: {
                std::string topic, body;
                if (!split_data_payload(frame.payload, &topic, &body)) {
                    fail("MALFORMED: truncated DATA payload");
                    s->dead = true;
                    break;
                }
                try {
                    ln->hub->publish(topic, std::move(body));
                } catch (const Error& e) {
                    if (e.code() == Errc::MESSAGE_TOO_LARGE) {
                        fail(std::string(e.what()));  // session survives
                    } else {
                        fail(std::string(e.name()));
                        s->dead = true;
                    }
                }
                break;
            }
            case FrameType::Close:
                s->dead = true;
                break;
            case FrameType::Auth:
            case FrameType::Ack:
            case FrameType::Err:
                break;  // tolerated, meaningless from a client mid-session
        }
        if (s->dead) break;
    }

    ln->hub->unsubscribe(s->sub);
    s->dead = true;
    ::shutdown(s->fd, SHUT_RD);
}

void StreamNode::l7_writer(const std::shared_ptr<Listener>& ln,
                           const std::shared_ptr<Session>& s) {
    while (!s->dead) {
        auto m = s->sub->poll(std::chrono::milliseconds(100));
        if (m) {
            Frame f{FrameType::Data, 0, ln->channel_id, make_data_payload(m->topic, *m->body)};
            send_frame(s, f);
            continue;
        }
        if (s->sub->finished()) {
            // Hub closed (teardown) or the reader unsubscribed us: announce
            // the end of the stream before the socket goes away.
            send_frame(s, Frame{FrameType::Close, 0, ln->channel_id, ""});
            break;
        }
    }
    s->dead = true;
    ::shutdown(s->fd, SHUT_RD);
}

void StreamNode::l4_pump(const std::shared_ptr<Listener>& ln, const std::shared_ptr<Session>& s,
                         bool inbound) {
    const int from = inbound ? s->fd : s->target_fd;
    const int to = inbound ? s->target_fd : s->fd;
    std::vector<char> buf(kIoChunk);
    while (!s->dead) {
        if (!wait_readable(from, 100)) continue;
        ssize_t n = ::recv(from, buf.data(), buf.size(), 0);
        if (n <= 0) break;
        if (!send_all(to, buf.data(), size_t(n))) break;
        if (inbound)
            ln->hub->add_bytes_in(n);
        else
            ln->hub->add_bytes_out(n);
    }
    s->dead = true;
    ::shutdown(s->fd, SHUT_RDWR);
    ::shutdown(s->target_fd, SHUT_RDWR);
}

void StreamNode::reap_finished(Listener& ln) {
    std::lock_guard<std::mutex> lk(ln.sessions_mu);
    for (auto it = ln.sessions.begin(); it != ln.sessions.end();) {
        auto& s = *it;
        if (s->dead) {
            if (s->reader.joinable()) s->reader.join();
            if (s->writer.joinable()) s->writer.join();
            close_fd(s->fd);
            close_fd(s->target_fd);
            it = ln.sessions.erase(it);
        } else {
            ++it;
        }
    }
}

void StreamNode::close_channel(uint32_t channel_id) {
    std::shared_ptr<Listener> ln;
    {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = listeners_.find(channel_id);
        if (it == listeners_.end()) return;
        ln = it->second;
        listeners_.erase(it);
    }
    ln->stopping = true;
    // Closing the hub first (idempotent — Broker::teardown may already have)
    // unblocks producers stalled in publish(), finishes every subscription so
    // writers drain and send their CLOSE frames, and lets readers fall out.
    ln->hub->close();
    ::shutdown(ln->fd, SHUT_RDWR);
    if (ln->accept_thread.joinable()) ln->accept_thread.join();

    std::vector<std::shared_ptr<Session>> sessions;
    {
        std::lock_guard<std::mutex> lk(ln->sessions_mu);
        sessions.swap(ln->sessions);
    }
    for (auto& s : sessions) {
        ::shutdown(s->fd, SHUT_RD);  // wake a reader blocked in recv
        if (s->writer.joinable()) s->writer.join();
        s->dead = true;
        if (s->reader.joinable()) s->reader.join();
        close_fd(s->fd);
        close_fd(s->target_fd);
    }
    close_fd(ln->fd);
}

void StreamNode::stop() {
    std::vector<uint32_t> ids;
    {
        std::lock_guard<std::mutex> lk(mu_);
        for (const auto& [id, ln] : listeners_) ids.push_back(id);
    }
    for (uint32_t id : ids) close_channel(id);
}

size_t StreamNode::live_sessions(uint32_t channel_id) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = listeners_.find(channel_id);
    if (it == listeners_.end()) return 0;
    std::lock_guard<std::mutex> slk(it->second->sessions_mu);
    size_t n = 0;
    for (const auto& s : it->second->sessions)
        if (!s->dead) ++n;
    return n;
}

// -------------------------------------------------------------- l7 client

L7Client::~L7Client() { close(); }

L7Client::L7Client(L7Client&& other) noexcept { *this = std::move(other); }

L7Client& L7Client::operator=(L7Client&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        channel_id_ = other.channel_id_;
        rbuf_ = std::move(other.rbuf_);
        roff_ = other.roff_;
        finished_ = other.finished_;
        pending_ = std::move(other.pending_);
        other.fd_ = -1;
    }
    return *this;
}

void L7Client::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void L7Client::throw_err_payload(const std::string& payload) {
    auto colon = payload.find(':');
    std::string name = colon == std::string::npos ? payload : payload.substr(0, colon);
    auto code = errc_from_name(name);
    throw Error(code.value_or(Errc::BACKEND_FAILURE), payload);
}

std::optional<Frame> L7Client::read_frame(int timeout_ms) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
        Frame f;
        size_t consumed = 0;
        std::string reason;
        auto st = decode_frame(reinterpret_cast<const uint8_t*>(rbuf_.data()) + roff_,
                               rbuf_.size() - roff_, &f, &consumed, &reason);
        if (st == DecodeStatus::Bad)
            throw Error(Errc::MALFORMED, "server sent unparseable bytes: " + reason);
        if (st == DecodeStatus::Ok) {
            roff_ += consumed;
            if (roff_ == rbuf_.size()) {
                rbuf_.clear();
                roff_ = 0;
            }
            return f;
        }
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - std::chrono::steady_clock::now())
                        .count();
        if (left < 0) left = 0;
        if (!wait_readable(fd_, int(left))) return std::nullopt;
        size_t old = rbuf_.size();
        rbuf_.resize(old + kIoChunk);
        ssize_t n = ::recv(fd_, rbuf_.data() + old, kIoChunk, 0);
        if (n <= 0) {
            rbuf_.resize(old);
            finished_ = true;
            throw Error(Errc::CHANNEL_CLOSED, "connection closed by peer");
        }
        rbuf_.resize(old + size_t(n));
    }
}

L7Client L7Client::connect(const std::string& host, uint16_t port, uint32_t channel_id,
                           const std::string& token) {
    L7Client c;
    c.fd_ = tcp_connect(host, port);
    c.channel_id_ = channel_id;
    std::string auth = encode_frame(Frame{FrameType::Auth, 0, channel_id, token});
    if (!send_all(c.fd_, auth.data(), auth.size()))
        throw Error(Errc::IO_ERROR, "handshake send failed");
    auto reply = c.read_frame(5000);
    if (!reply) throw Error(Errc::IO_ERROR, "handshake timed out");
    if (reply->type == FrameType::Err) throw_err_payload(reply->payload);
    if (reply->type != FrameType::Ack) throw Error(Errc::MALFORMED, "unexpected handshake reply");
    return c;
}

void L7Client::subscribe(const std::string& topic) {
    std::string f = encode_frame(Frame{FrameType::Sub, 0, channel_id_, topic});
    if (!send_all(fd_, f.data(), f.size())) throw Error(Errc::IO_ERROR, "send failed");
    for (;;) {
        auto reply = read_frame(5000);
        if (!reply) throw Error(Errc::IO_ERROR, "subscribe timed out");
        if (reply->type == FrameType::Ack) return;
        if (reply->type == FrameType::Err) throw_err_payload(reply->payload);
        if (reply->type == FrameType::Data) {
            std::string topic2, body;
            if (split_data_payload(reply->payload, &topic2, &body))
                pending_.push_back({topic2, std::make_shared<const std::string>(std::move(body))});
            continue;
        }
        if (reply->type == FrameType::Close) {
            finished_ = true;
            throw Error(Errc::CHANNEL_CLOSED, "closed during subscribe");
        }
    }
}

void L7Client::publish(const std::string& topic, const std::string& body) {
    std::string f =
        encode_frame(Frame{FrameType::Data, 0, channel_id_, make_data_payload(topic, body)});
    if (!send_all(fd_, f.data(), f.size())) throw Error(Errc::IO_ERROR, "send failed");
}

std::optional<Message> L7Client::next_message(int timeout_ms) {
    if (!pending_.empty()) {
        Message m = std::move(pending_.front());
        pending_.pop_front();
        return m;
    }
    if (finished_) return std::nullopt;
    for (;;) {
        std::optional<Frame> f;
        try {
            f = read_frame(timeout_ms);
        } catch (const Error& e) {
            if (e.code() == Errc::CHANNEL_CLOSED) return std::nullopt;
            throw;
        }
        if (!f) return std::nullopt;
        switch (f->type) {
            case FrameType::Data: {
                std::string topic, body;
                if (!split_data_payload(f->payload, &topic, &body))
                    throw Error(Errc::MALFORMED, "truncated DATA from server");
                return Message{topic, std::make_shared<const std::string>(std::move(body))};
            }
            case FrameType::Close: finished_ = true; return std::nullopt;
            case FrameType::Err: throw_err_payload(f->payload);
            default: break;  // stray ACK
        }
    }
}

std::optional<Errc> L7Client::poll_error(int timeout_ms) {
    for (;;) {
        std::optional<Frame> f;
        try {
            f = read_frame(timeout_ms);
        } catch (const Error& e) {
            if (e.code() == Errc::CHANNEL_CLOSED) return std::nullopt;
            throw;
        }
        if (!f) return std::nullopt;
        if (f->type == FrameType::Err) {
            auto colon = f->payload.find(':');
            auto code = errc_from_name(colon == std::string::npos
                                           ? f->payload
                                           : f->payload.substr(0, colon));
            return code.value_or(Errc::BACKEND_FAILURE);
        }
        if (f->type == FrameType::Data) {
            std::string topic, body;
            if (split_data_payload(f->payload, &topic, &body))
                pending_.push_back({topic, std::make_shared<const std::string>(std::move(body))});
        }
        if (f->type == FrameType::Close) {
            finished_ = true;
            return std::nullopt;
        }
    }
}

// --------------------------------------------------------------- byte sink

ByteSink::ByteSink(bool echo) : echo_(echo) {
    fd_ = listen_on_loopback(0, &port_);
    thread_ = std::thread([this] { run(); });
}

ByteSink::~ByteSink() { stop(); }

uint64_t ByteSink::checksum() const {
    std::lock_guard<std::mutex> lk(mu_);
    return fnv_.digest();
}

void ByteSink::stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(fd_, SHUT_RDWR);
    if (thread_.joinable()) thread_.join();
    for (auto& t : conns_)
        if (t.joinable()) t.join();
    close_fd(fd_);
    fd_ = -1;
}

void ByteSink::run() {
    while (!stopping_) {
        if (!wait_readable(fd_, 100)) continue;
        int cfd = ::accept(fd_, nullptr, nullptr);
        if (cfd < 0) {
            if (stopping_) break;
            continue;
        }
        set_nodelay(cfd);
        conns_.emplace_back([this, cfd] {
            std::vector<char> buf(kIoChunk);
            while (!stopping_) {
                if (!wait_readable(cfd, 100)) continue;
                ssize_t n = ::recv(cfd, buf.data(), buf.size(), 0);
                if (n <= 0) break;
                {
                    std::lock_guard<std::mutex> lk(mu_);
                    fnv_.update(std::string_view(buf.data(), size_t(n)));
                }
                total_ += n;
                if (echo_ && !send_all(cfd, buf.data(), size_t(n))) break;
            }
            ::close(cfd);
        });
    }
}

}  // namespace scimesh::dsn
