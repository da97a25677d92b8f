#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace arax {

constexpr std::uint64_t kNsPerUs = 1000;
constexpr std::uint64_t kNsPerMs = 1000 * 1000;

/// Monotonic nanosecond time source. Devices, the server and the bench driver
/// all read time through this so the same code runs on a real or a virtual
/// timeline.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::uint64_t now_ns() const = 0;
  virtual bool is_virtual() const = 0;
};

class RealClock final : public Clock {
 public:
  RealClock() : origin_(std::chrono::steady_clock::now()) {}

  std::uint64_t now_ns() const override {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - origin_)
            .count());
  }
  bool is_virtual() const override { return false; }

 private:
  std::chrono::steady_clock::time_point origin_;
};

/// Time only moves when the simulation driver advances it.
class VirtualClock final : public Clock {
 public:
  std::uint64_t now_ns() const override { return now_.load(std::memory_order_acquire); }
  bool is_virtual() const override { return true; }

  void advance_to(std::uint64_t t) {
    if (t > now_.load(std::memory_order_relaxed)) now_.store(t, std::memory_order_release);
  }

 private:
  std::atomic<std::uint64_t> now_{0};
};

}  // namespace arax
