#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "scimesh/gateway/config.hpp"

namespace scimesh::gateway {

struct RateBucket {
    int capacity = 0;
    double level = 0.0;
    double refill_per_s = 0.0;
    int64_t last_update_ms = 0;
};

/// Token buckets keyed by (subject, endpoint class). Thread-safe.
class BucketStore {
  public:
    explicit BucketStore(std::map<std::string, RateClassLimit> limits)
        : limits_(std::move(limits)) {}

    /// Refills from elapsed time, then takes `cost` tokens if available.
    bool check(const std::string& subject, const std::string& endpoint_class, int cost,
               int64_t now_ms);

    std::optional<RateBucket> peek(const std::string& subject,
                                   const std::string& endpoint_class) const;

  private:
    RateClassLimit class_limit(const std::string& endpoint_class) const;

    mutable std::mutex mu_;
    std::map<std::string, RateClassLimit> limits_;
    std::map<std::pair<std::string, std::string>, RateBucket> buckets_;
};

}  // namespace scimesh::gateway
