#pragma once

#include <algorithm>
#include <chrono>
#include <thread>

namespace arax {

/// Exponential backoff for polling loops: starts with a short pause and
/// doubles up to a cap. Spins (yields) while the delay is below the sleep
/// threshold so the fast path never enters the kernel for a timed sleep.
class Backoff {
 public:
  explicit Backoff(std::chrono::nanoseconds initial = std::chrono::microseconds(1),
                   std::chrono::nanoseconds cap = std::chrono::milliseconds(1))
      : initial_(initial), cap_(cap), delay_(initial) {}

  void pause() {
    if (delay_ < kSpinLimit) {
      std::this_thread::yield();
    } else {
      std::this_thread::sleep_for(delay_);
    }
    delay_ = std::min(delay_ * 2, cap_);
  }

  void reset() { delay_ = initial_; }

  std::chrono::nanoseconds current() const { return delay_; }

 private:
  static constexpr std::chrono::nanoseconds kSpinLimit = std::chrono::microseconds(16);

  std::chrono::nanoseconds initial_;
  std::chrono::nanoseconds cap_;
  std::chrono::nanoseconds delay_;
};

}  // namespace arax
