#include "scimesh/gateway/audit.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>

#include "scimesh/errors.hpp"

using nlohmann::json;

namespace scimesh::gateway {

std::string AuditRecord::to_jsonl() const {
    json j{{"ts_ms", ts_ms},
            {"request_id", request_id},
            {"subject", subject},
            {"action", action},
            {"resource", resource},
            {"verdict", verdict},
            {"reason", reason},
            {"http_status", http_status},
            {"latency_ms", latency_ms}};
    return j.dump();
}

std::optional<AuditRecord> AuditRecord::from_jsonl(const std::string& line) {
    try {
        json j = json::parse(line);
        AuditRecord r;
        r.ts_ms = j.at("ts_ms");
        r.request_id = j.at("request_id");
        r.subject = j.at("subject");
        r.action = j.at("action");
        r.resource = j.at("resource");
        r.verdict = j.at("verdict");
        r.reason = j.at("reason");
        r.http_status = j.at("http_status");
        r.latency_ms = j.at("latency_ms");
        return r;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

bool AuditFilter::matches(const AuditRecord& r) const {
    if (subject && r.subject != *subject) return false;
    if (time_range_ms && (r.ts_ms < time_range_ms->first || r.ts_ms >= time_range_ms->second))
        return false;
    if (verdict && r.verdict != *verdict) return false;
    if (request_id && r.request_id != *request_id) return false;
    return true;
}

AuditStore::AuditStore(std::string path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
    if (fd_ < 0) throw Error(Errc::STORE_UNAVAILABLE, "cannot open audit log at " + path_);
}

AuditStore::~AuditStore() {
    if (fd_ >= 0) ::close(fd_);
}

void AuditStore::append(const AuditRecord& record) {
    std::unique_lock lk(mu_);
    if (failed_) throw Error(Errc::STORE_UNAVAILABLE, "audit store marked failed");

    std::string line = record.to_jsonl();
    line.push_back('\n');
    size_t off = 0;
    while (off < line.size()) {
        ssize_t n = ::write(fd_, line.data() + off, line.size() - off);
        if (n < 0) {
            failed_ = true;
            cv_.notify_all();
            throw Error(Errc::STORE_UNAVAILABLE, "audit write failed");
        }
        off += size_t(n);
    }
    uint64_t my_seq = ++write_seq_;

    while (durable_seq_ < my_seq) {
        if (failed_) throw Error(Errc::STORE_UNAVAILABLE, "audit store marked failed");
        if (!flushing_) {
            // Become the leader: sync everything written so far, capped at 16
            // records beyond the durable frontier.
            flushing_ = true;
            uint64_t target = std::min(write_seq_, durable_seq_ + 16);
            lk.unlock();
            int rc = ::fdatasync(fd_);
            lk.lock();
            flushing_ = false;
            if (rc != 0) {
                failed_ = true;
                cv_.notify_all();
                throw Error(Errc::STORE_UNAVAILABLE, "audit fsync failed");
            }
            // The fsync covered every byte written before it started.
            durable_seq_ = std::max(durable_seq_, target);
            cv_.notify_all();
        } else {
            cv_.wait_for(lk, std::chrono::milliseconds(50));
        }
    }
}

std::vector<AuditRecord> AuditStore::query(const AuditFilter& filter) const {
    std::lock_guard lk(mu_);
    std::vector<AuditRecord> out;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (auto r = AuditRecord::from_jsonl(line); r && filter.matches(*r)) out.push_back(*r);
    }
    return out;
}

uint64_t AuditStore::appended_count() const {
    std::lock_guard lk(mu_);
    return write_seq_;
}

bool AuditStore::healthy() const {
    std::lock_guard lk(mu_);
    return !failed_;
}

void AuditStore::fail_appends_for_testing(bool fail) {
    std::lock_guard lk(mu_);
    failed_ = fail;
    cv_.notify_all();
}

}  // namespace scimesh::gateway
