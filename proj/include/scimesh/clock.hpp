#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <thread>

namespace scimesh {

// All time-dependent behavior flows through a Clock handle so tests and the
// scenario runner can pin time exactly. Units are unix milliseconds.
class Clock {
  public:
    virtual ~Clock() = default;

    virtual int64_t now_millis() const = 0;

    /// Blocks until now_millis() >= t_millis.
    virtual void sleep_until_millis(int64_t t_millis) = 0;

    int64_t now_seconds() const { return now_millis() / 1000; }
};

class RealClock final : public Clock {
  public:
    int64_t now_millis() const override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }

    void sleep_until_millis(int64_t t_millis) override {
        int64_t now = now_millis();
        if (t_millis > now)
            std::this_thread::sleep_for(std::chrono::milliseconds(t_millis - now));
    }
};

// Manually advanced clock. In auto-advance mode a sleeper jumps time forward
// itself, so paced loops complete instantly (single-task test mode). In the
// default mode sleepers block until whoever owns time calls advance()/set(),
// which is how the scenario runner serializes paced tasks.
class SimClock final : public Clock {
  public:
    explicit SimClock(int64_t start_millis = 0, bool auto_advance = false)
        : now_(start_millis), auto_advance_(auto_advance) {}

    int64_t now_millis() const override { return now_.load(std::memory_order_acquire); }

    void sleep_until_millis(int64_t t_millis) override {
        if (auto_advance_) {
            set_millis(t_millis);
            return;
        }
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return now_.load(std::memory_order_acquire) >= t_millis; });
    }

    void advance_millis(int64_t delta) { set_millis(now_millis() + delta); }

    void set_millis(int64_t t) {
        int64_t cur = now_.load(std::memory_order_acquire);
        while (cur < t && !now_.compare_exchange_weak(cur, t)) {
        }
        std::lock_guard<std::mutex> lk(mu_);
        cv_.notify_all();
    }

  private:
    std::atomic<int64_t> now_;
    bool auto_advance_;
    std::mutex mu_;
    std::condition_variable cv_;
};

}  // namespace scimesh
