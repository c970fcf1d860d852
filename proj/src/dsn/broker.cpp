#include "scimesh/dsn/broker.hpp"

#include <algorithm>

#include "scimesh/util.hpp"

namespace scimesh::dsn {

using nlohmann::json;

std::string mode_name(ChannelMode m) {
    return m == ChannelMode::gateway_l7 ? "gateway_l7" : "router_l4";
}

ChannelMode mode_from_name(const std::string& name) {
    if (name == "gateway_l7") return ChannelMode::gateway_l7;
    if (name == "router_l4") return ChannelMode::router_l4;
    throw Error(Errc::INVALID_TEMPLATE, "unknown mode '" + name + "'");
}

std::string overflow_name(OverflowPolicy p) {
    return p == OverflowPolicy::block ? "block" : "drop_newest";
}

OverflowPolicy overflow_from_name(const std::string& name) {
    if (name == "block") return OverflowPolicy::block;
    if (name == "drop_newest") return OverflowPolicy::drop_newest;
    throw Error(Errc::INVALID_TEMPLATE, "unknown overflow policy '" + name + "'");
}

std::string channel_state_name(ChannelState s) {
    switch (s) {
        case ChannelState::provisioned: return "provisioned";
        case ChannelState::active: return "active";
        case ChannelState::closed: return "closed";
    }
    return "?";
}

// ---------------------------------------------------------------- templates

json ChannelTemplate::to_json() const {
    return json{{"template_id", template_id},
                {"mode", mode_name(mode)},
                {"allowed_external_cidrs", allowed_external_cidrs},
                {"allowed_internal_targets", allowed_internal_targets},
                {"buffer_capacity_bytes", buffer_capacity_bytes},
                {"overflow_policy", overflow_name(overflow_policy)},
                {"max_message_bytes", max_message_bytes}};
}

ChannelTemplate ChannelTemplate::from_json(const json& j) {
    ChannelTemplate t;
    try {
        t.template_id = j.at("template_id").get<std::string>();
        t.mode = mode_from_name(j.at("mode").get<std::string>());
        t.allowed_external_cidrs = j.at("allowed_external_cidrs").get<std::vector<std::string>>();
        t.allowed_internal_targets =
            j.at("allowed_internal_targets").get<std::vector<std::string>>();
        t.buffer_capacity_bytes = j.at("buffer_capacity_bytes").get<int64_t>();
        if (j.contains("overflow_policy"))
            t.overflow_policy = overflow_from_name(j.at("overflow_policy").get<std::string>());
        if (j.contains("max_message_bytes"))
            t.max_message_bytes = j.at("max_message_bytes").get<int64_t>();
    } catch (const json::exception& e) {
        throw Error(Errc::INVALID_TEMPLATE, e.what());
    }
    t.validate();
    return t;
}

void ChannelTemplate::validate() const {
    if (template_id.empty()) throw Error(Errc::INVALID_TEMPLATE, "empty template_id");
    if (allowed_external_cidrs.empty())
        throw Error(Errc::INVALID_TEMPLATE, "allowed_external_cidrs must be non-empty");
    if (allowed_internal_targets.empty())
        throw Error(Errc::INVALID_TEMPLATE, "allowed_internal_targets must be non-empty");
    for (const auto& c : allowed_external_cidrs)
        if (!util::parse_cidr(c)) throw Error(Errc::INVALID_TEMPLATE, "bad CIDR '" + c + "'");
    for (const auto& t : allowed_internal_targets) {
        auto colon = t.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == t.size())
            throw Error(Errc::INVALID_TEMPLATE, "bad target '" + t + "' (want host:port)");
    }
    if (buffer_capacity_bytes <= 0)
        throw Error(Errc::INVALID_TEMPLATE, "buffer_capacity_bytes must be positive");
    if (max_message_bytes < 0) throw Error(Errc::INVALID_TEMPLATE, "negative max_message_bytes");
    if (mode == ChannelMode::gateway_l7) {
        if (max_message_bytes <= 0)
            throw Error(Errc::INVALID_TEMPLATE, "gateway_l7 requires max_message_bytes");
        if (buffer_capacity_bytes < max_message_bytes)
            throw Error(Errc::INVALID_TEMPLATE, "buffer smaller than max_message_bytes");
    }
}

// ------------------------------------------------------------- subscription

std::optional<Message> Subscription::poll(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait_for(lk, timeout, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    Message m = std::move(q_.front());
    q_.pop_front();
    return m;
}

bool Subscription::finished() {
    std::lock_guard<std::mutex> lk(mu_);
    return closed_ && q_.empty();
}

// -------------------------------------------------------------------- hub

ChannelHub::ChannelHub(uint32_t channel_id, ChannelMode mode, int64_t capacity_bytes,
                       int64_t max_message_bytes, OverflowPolicy policy)
    : channel_id_(channel_id),
      mode_(mode),
      capacity_bytes_(capacity_bytes),
      max_message_bytes_(max_message_bytes),
      policy_(policy) {}

ChannelHub::PublishResult ChannelHub::publish(const std::string& topic, std::string body) {
    if (topic.size() > 0xFFFF)
        throw Error(Errc::MESSAGE_TOO_LARGE, "topic exceeds 65535 bytes");
    if (max_message_bytes_ > 0 && int64_t(body.size()) > max_message_bytes_)
        throw Error(Errc::MESSAGE_TOO_LARGE, std::to_string(body.size()) + " > " +
                                                 std::to_string(max_message_bytes_));

    const int64_t body_bytes = int64_t(body.size());
    const int64_t wire_bytes = int64_t(data_frame_wire_size(topic.size(), body.size()));

    std::unique_lock<std::mutex> lk(mu_);
    if (closed_) throw Error(Errc::CHANNEL_CLOSED, "channel " + std::to_string(channel_id_));
    buf_.attempted_body_bytes += body_bytes;
    counters_.bytes_in += wire_bytes;
    counters_.messages += 1;

    if (buf_.occupancy_bytes + body_bytes > capacity_bytes_) {
        if (policy_ == OverflowPolicy::drop_newest) {
            buf_.dropped_body_bytes += body_bytes;
            counters_.drops += 1;
            return PublishResult::dropped;
        }
        space_cv_.wait(lk, [&] {
            return closed_ || buf_.occupancy_bytes + body_bytes <= capacity_bytes_;
        });
        if (closed_) {
            // The message never entered the buffer; keep the ledger balanced.
            buf_.dropped_body_bytes += body_bytes;
            counters_.drops += 1;
            throw Error(Errc::CHANNEL_CLOSED, "closed while blocked");
        }
    }

    buf_.admitted_body_bytes += body_bytes;
    buf_.occupancy_bytes += body_bytes;
    Message m{topic, std::make_shared<const std::string>(std::move(body))};
    queues_[topic].push_back(std::move(m));
    dispatch_topic_locked(topic);
    return PublishResult::admitted;
}

std::shared_ptr<Subscription> ChannelHub::subscribe(const std::vector<std::string>& topics) {
    auto sub = std::make_shared<Subscription>();
    sub->topics_.insert(topics.begin(), topics.end());
    std::lock_guard<std::mutex> lk(mu_);
    if (closed_) throw Error(Errc::CHANNEL_CLOSED, "channel " + std::to_string(channel_id_));
    subs_.push_back(sub);
    for (const auto& t : sub->topics_) dispatch_topic_locked(t);
    return sub;
}

void ChannelHub::add_topics(const std::shared_ptr<Subscription>& sub,
                            const std::vector<std::string>& topics) {
    std::lock_guard<std::mutex> lk(mu_);
    if (closed_) throw Error(Errc::CHANNEL_CLOSED, "channel " + std::to_string(channel_id_));
    for (const auto& t : topics) {
        sub->topics_.insert(t);
        dispatch_topic_locked(t);
    }
}

void ChannelHub::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard<std::mutex> lk(mu_);
    subs_.erase(std::remove(subs_.begin(), subs_.end(), sub), subs_.end());
    std::lock_guard<std::mutex> slk(sub->mu_);
    sub->closed_ = true;
    sub->cv_.notify_all();
}

// Moves every queued message of `topic` to all current subscribers of it.
// Messages with no subscriber stay buffered (and keep holding capacity) so a
// late subscriber still sees them: delivery needs at least one consumer, and
// backpressure applies until one shows up.
void ChannelHub::dispatch_topic_locked(const std::string& topic) {
    auto qit = queues_.find(topic);
    if (qit == queues_.end() || qit->second.empty()) return;

    std::vector<Subscription*> takers;
    for (const auto& s : subs_)
        if (s->topics_.count(topic)) takers.push_back(s.get());
    if (takers.empty()) return;

    for (auto& msg : qit->second) {
        const int64_t body_bytes = int64_t(msg.body->size());
        const int64_t wire_bytes = int64_t(data_frame_wire_size(topic.size(), msg.body->size()));
        for (Subscription* s : takers) {
            std::lock_guard<std::mutex> slk(s->mu_);
            s->q_.push_back(msg);
            s->cv_.notify_all();
            counters_.bytes_out += wire_bytes;
        }
        buf_.consumed_body_bytes += body_bytes;
        buf_.occupancy_bytes -= body_bytes;
    }
    qit->second.clear();
    space_cv_.notify_all();
}

void ChannelHub::close() {
    std::lock_guard<std::mutex> lk(mu_);
    if (closed_) return;
    closed_ = true;
    // Anything still buffered can never be delivered now.
    for (auto& [topic, q] : queues_) {
        for (const auto& msg : q) {
            buf_.dropped_body_bytes += int64_t(msg.body->size());
            buf_.occupancy_bytes -= int64_t(msg.body->size());
            counters_.drops += 1;
        }
        q.clear();
    }
    space_cv_.notify_all();
    for (const auto& s : subs_) {
        std::lock_guard<std::mutex> slk(s->mu_);
        s->closed_ = true;
        s->cv_.notify_all();
    }
}

bool ChannelHub::is_closed() const {
    std::lock_guard<std::mutex> lk(mu_);
    return closed_;
}

void ChannelHub::add_bytes_in(int64_t n) {
    std::lock_guard<std::mutex> lk(mu_);
    counters_.bytes_in += n;
}

void ChannelHub::add_bytes_out(int64_t n) {
    std::lock_guard<std::mutex> lk(mu_);
    counters_.bytes_out += n;
}

ChannelCounters ChannelHub::counters() const {
    std::lock_guard<std::mutex> lk(mu_);
    return counters_;
}

BufferAccounting ChannelHub::buffer_accounting() const {
    std::lock_guard<std::mutex> lk(mu_);
    return buf_;
}

bool ChannelHub::conservation_holds() const {
    std::lock_guard<std::mutex> lk(mu_);
    return buf_.attempted_body_bytes ==
               buf_.consumed_body_bytes + buf_.occupancy_bytes + buf_.dropped_body_bytes &&
           buf_.occupancy_bytes >= 0;
}

// ------------------------------------------------------------ channel info

json ChannelInfo::to_json() const {
    return json{{"channel_id", channel_id},
                {"template_id", template_id},
                {"owner_project", owner_project},
                {"state", channel_state_name(state)},
                {"mode", mode_name(mode)},
                {"internal_target", internal_target},
                {"data_port", data_port},
                {"buffer_capacity_bytes", buffer_capacity_bytes},
                {"max_message_bytes", max_message_bytes},
                {"overflow_policy", overflow_name(overflow_policy)},
                {"counters",
                 {{"bytes_in", counters.bytes_in},
                  {"bytes_out", counters.bytes_out},
                  {"messages", counters.messages},
                  {"drops", counters.drops}}}};
}

// ------------------------------------------------------------------ broker

Broker::Broker(Clock& clock) : clock_(clock) {}

void Broker::add_template(const ChannelTemplate& t) {
    t.validate();
    std::lock_guard<std::mutex> lk(mu_);
    if (templates_.count(t.template_id))
        throw Error(Errc::INVALID_TEMPLATE, "duplicate template '" + t.template_id + "'");
    templates_[t.template_id] = t;
}

void Broker::load_templates_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::PARSE_ERROR, e.what());
    }
    if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_array())
        throw Error(Errc::INVALID_TEMPLATE, "expected {\"templates\": [...]}");
    for (const auto& j : doc["templates"]) add_template(ChannelTemplate::from_json(j));
}

ChannelTemplate Broker::get_template(const std::string& id) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = templates_.find(id);
    if (it == templates_.end()) throw Error(Errc::UNKNOWN_TEMPLATE, id);
    return it->second;
}

std::vector<ChannelTemplate> Broker::templates() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::vector<ChannelTemplate> out;
    for (const auto& [id, t] : templates_) out.push_back(t);
    return out;
}

ChannelInfo Broker::provision(const ProvisionRequest& req, const std::string& owner_project,
                              bool has_provision_scope) {
    if (!has_provision_scope)
        throw Error(Errc::FORBIDDEN, "streams.provision scope required");
    std::lock_guard<std::mutex> lk(mu_);
    auto it = templates_.find(req.template_id);
    if (it == templates_.end()) throw Error(Errc::UNKNOWN_TEMPLATE, req.template_id);
    const ChannelTemplate& tmpl = it->second;

    const auto& allowed = tmpl.allowed_internal_targets;
    if (std::find(allowed.begin(), allowed.end(), req.internal_target) == allowed.end())
        throw Error(Errc::TARGET_NOT_ALLOWED, req.internal_target);

    int64_t capacity = tmpl.buffer_capacity_bytes;
    if (req.buffer_capacity_bytes) {
        if (*req.buffer_capacity_bytes > tmpl.buffer_capacity_bytes)
            throw Error(Errc::BUFFER_EXCEEDS_TEMPLATE,
                        std::to_string(*req.buffer_capacity_bytes) + " > " +
                            std::to_string(tmpl.buffer_capacity_bytes));
        if (*req.buffer_capacity_bytes <= 0)
            throw Error(Errc::INVALID_ARGUMENT, "buffer_capacity_bytes must be positive");
        if (tmpl.mode == ChannelMode::gateway_l7 &&
            *req.buffer_capacity_bytes < tmpl.max_message_bytes)
            throw Error(Errc::INVALID_ARGUMENT, "buffer smaller than max_message_bytes");
        capacity = *req.buffer_capacity_bytes;
    }

    ChannelRec rec;
    rec.info.channel_id = next_channel_id_++;
    rec.info.template_id = tmpl.template_id;
    rec.info.owner_project = owner_project;
    rec.info.state = ChannelState::provisioned;
    rec.info.mode = tmpl.mode;
    rec.info.internal_target = req.internal_target;
    rec.info.buffer_capacity_bytes = capacity;
    rec.info.max_message_bytes = tmpl.max_message_bytes;
    rec.info.overflow_policy = tmpl.overflow_policy;
    rec.tmpl = tmpl;
    rec.hub = std::make_shared<ChannelHub>(rec.info.channel_id, tmpl.mode, capacity,
                                           tmpl.max_message_bytes, tmpl.overflow_policy);
    rec.samples.push_back({clock_.now_millis(), 0, 0});

    ChannelInfo out = rec.info;
    channels_.emplace(out.channel_id, std::move(rec));
    return out;
}

Broker::ChannelRec& Broker::rec(uint32_t channel_id) {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) throw Error(Errc::UNKNOWN_CHANNEL, std::to_string(channel_id));
    return it->second;
}

const Broker::ChannelRec& Broker::rec(uint32_t channel_id) const {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) throw Error(Errc::UNKNOWN_CHANNEL, std::to_string(channel_id));
    return it->second;
}

ChannelInfo Broker::info(uint32_t channel_id) const {
    std::lock_guard<std::mutex> lk(mu_);
    const ChannelRec& r = rec(channel_id);
    ChannelInfo out = r.info;
    if (r.info.state != ChannelState::closed) out.counters = r.hub->counters();
    return out;
}

std::vector<ChannelInfo> Broker::list() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::vector<ChannelInfo> out;
    for (const auto& [id, r] : channels_) {
        ChannelInfo ci = r.info;
        if (r.info.state != ChannelState::closed) ci.counters = r.hub->counters();
        out.push_back(ci);
    }
    return out;
}

void Broker::activate(uint32_t channel_id, uint16_t data_port) {
    std::lock_guard<std::mutex> lk(mu_);
    ChannelRec& r = rec(channel_id);
    if (r.info.state == ChannelState::closed)
        throw Error(Errc::CHANNEL_CLOSED, std::to_string(channel_id));
    r.info.state = ChannelState::active;
    r.info.data_port = data_port;
}

std::shared_ptr<ChannelHub> Broker::hub(uint32_t channel_id) const {
    std::lock_guard<std::mutex> lk(mu_);
    const ChannelRec& r = rec(channel_id);
    if (r.info.state == ChannelState::closed)
        throw Error(Errc::CHANNEL_CLOSED, std::to_string(channel_id));
    return r.hub;
}

ChannelCounters Broker::teardown(uint32_t channel_id, const std::string& project, bool admin) {
    std::function<void(uint32_t)> closer;
    std::shared_ptr<ChannelHub> hub;
    {
        std::lock_guard<std::mutex> lk(mu_);
        ChannelRec& r = rec(channel_id);
        if (r.info.state == ChannelState::closed)
            throw Error(Errc::UNKNOWN_CHANNEL, std::to_string(channel_id) + " already retired");
        if (!admin && r.info.owner_project != project)
            throw Error(Errc::FORBIDDEN, "channel owned by " + r.info.owner_project);
        closer = closer_;
        hub = r.hub;
    }
    // Socket shutdown and hub close run unlocked: session threads may be
    // blocked inside hub calls and must be able to finish.
    if (closer) closer(channel_id);
    hub->close();
    std::lock_guard<std::mutex> lk(mu_);
    ChannelRec& r = rec(channel_id);
    r.info.counters = hub->counters();
    r.info.state = ChannelState::closed;
    r.info.data_port = 0;
    return r.info.counters;
}

ThroughputStats Broker::throughput(uint32_t channel_id, double window_seconds) {
    if (window_seconds <= 0) throw Error(Errc::INVALID_ARGUMENT, "window must be positive");
    std::lock_guard<std::mutex> lk(mu_);
    ChannelRec& r = rec(channel_id);
    if (r.info.state == ChannelState::closed)
        throw Error(Errc::UNKNOWN_CHANNEL, std::to_string(channel_id) + " already retired");

    const int64_t now = clock_.now_millis();
    ChannelCounters cur = r.hub->counters();
    const int64_t window_ms = int64_t(window_seconds * 1000.0);
    const int64_t horizon = now - window_ms;

    // Baseline: newest sample at or before the window start; else the oldest.
    ChannelRec::Sample base = r.samples.front();
    for (const auto& s : r.samples) {
        if (s.t_millis <= horizon) base = s;
        else break;
    }
    // Prune samples strictly older than the baseline we just chose.
    while (!r.samples.empty() && r.samples.front().t_millis < base.t_millis)
        r.samples.pop_front();
    r.samples.push_back({now, cur.bytes_in, cur.messages});

    ThroughputStats st;
    // With a sample at or before the window start the counters' value there
    // is known exactly (they are monotonic and sampled), so the denominator
    // is the full window; with less history, rate over what we have.
    const double dt = base.t_millis <= horizon ? window_seconds
                                               : double(now - base.t_millis) / 1000.0;
    if (dt > 0) {
        st.bytes_per_second = double(cur.bytes_in - base.bytes_in) / dt;
        st.messages_per_second = double(cur.messages - base.messages) / dt;
    }
    return st;
}

void Broker::set_channel_closer(std::function<void(uint32_t)> closer) {
    std::lock_guard<std::mutex> lk(mu_);
    closer_ = std::move(closer);
}

bool Broker::l4_peer_allowed(const ChannelTemplate& t, const std::string& peer_ip) {
    auto addr = util::parse_ipv4(peer_ip);
    if (!addr) return false;
    for (const auto& c : t.allowed_external_cidrs) {
        auto cidr = util::parse_cidr(c);
        if (cidr && cidr->contains(*addr)) return true;
    }
    return false;
}

}  // namespace scimesh::dsn
