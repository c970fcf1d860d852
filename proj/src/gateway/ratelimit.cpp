#include "scimesh/gateway/ratelimit.hpp"

#include <algorithm>

namespace scimesh::gateway {

RateClassLimit BucketStore::class_limit(const std::string& endpoint_class) const {
    auto it = limits_.find(endpoint_class);
    if (it != limits_.end()) return it->second;
    return {10, 1.0};  // conservative fallback for unlisted classes
}

bool BucketStore::check(const std::string& subject, const std::string& endpoint_class, int cost,
                        int64_t now_ms) {
    std::lock_guard lk(mu_);
    auto key = std::make_pair(subject, endpoint_class);
    auto it = buckets_.find(key);
    if (it == buckets_.end()) {
        auto limit = class_limit(endpoint_class);
        RateBucket fresh{limit.capacity, double(limit.capacity), limit.refill_per_s, now_ms};
        it = buckets_.emplace(key, fresh).first;
    }
    RateBucket& b = it->second;
    if (now_ms > b.last_update_ms) {
        double elapsed_s = double(now_ms - b.last_update_ms) / 1000.0;
        b.level = std::min(double(b.capacity), b.level + b.refill_per_s * elapsed_s);
        b.last_update_ms = now_ms;
    }
    if (b.level + 1e-9 < double(cost)) return false;
    b.level -= double(cost);
    return true;
}

std::optional<RateBucket> BucketStore::peek(const std::string& subject,
                                            const std::string& endpoint_class) const {
    std::lock_guard lk(mu_);
    auto it = buckets_.find(std::make_pair(subject, endpoint_class));
    if (it == buckets_.end()) return std::nullopt;
    return it->second;
}

}  // namespace scimesh::gateway
