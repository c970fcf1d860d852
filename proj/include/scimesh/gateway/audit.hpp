#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace scimesh::gateway {

struct AuditRecord {
    int64_t ts_ms = 0;
    std::string request_id;
    std::string subject = "anonymous";
    std::string action;
    std::string resource;
    std::string verdict;  // "allow" | "deny"
    std::string reason;
    int http_status = 0;
    double latency_ms = 0.0;

    std::string to_jsonl() const;
    static std::optional<AuditRecord> from_jsonl(const std::string& line);
};

struct AuditFilter {
    std::optional<std::string> subject;
    std::optional<std::pair<int64_t, int64_t>> time_range_ms;  // [start, end)
    std::optional<std::string> verdict;
    std::optional<std::string> request_id;

    bool matches(const AuditRecord& r) const;
};

/// Append-only JSONL sink. Appends group-commit: a leader fsyncs batches of
/// at most 16 records; every append returns only after its record is durable.
class AuditStore {
  public:
    explicit AuditStore(std::string path);  // throws STORE_UNAVAILABLE
    ~AuditStore();
    AuditStore(const AuditStore&) = delete;
    AuditStore& operator=(const AuditStore&) = delete;

    /// Durable before return. Throws STORE_UNAVAILABLE.
    void append(const AuditRecord& record);

    /// Matching records in append order (reads the backing file).
    std::vector<AuditRecord> query(const AuditFilter& filter) const;

    uint64_t appended_count() const;

    /// Makes subsequent appends fail, to exercise fail-closed paths.
    void fail_appends_for_testing(bool fail);

    /// False once an append has failed (or failure was injected); the
    /// gateway refuses to dispatch requests to backends while unhealthy.
    bool healthy() const;

    const std::string& path() const { return path_; }

  private:
    std::string path_;
    int fd_ = -1;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    uint64_t write_seq_ = 0;    // last record written to the fd
    uint64_t durable_seq_ = 0;  // last record covered by a completed fsync
    bool flushing_ = false;
    bool failed_ = false;
};

}  // namespace scimesh::gateway
