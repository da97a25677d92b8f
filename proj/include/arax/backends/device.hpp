#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "arax/backends/kernel.hpp"
#include "arax/common/clock.hpp"

namespace arax::backends {

enum class DeviceType { kCpu, kSimGpu, kSimFpga };

std::string_view to_string(DeviceType type);
DeviceType parse_device_type(std::string_view text);

using DeviceId = std::uint32_t;

struct DeviceDescriptor {
  DeviceId id = 0;
  std::string name;
  DeviceType type = DeviceType::kCpu;
  /// Added delay relative to native CPU speed: duration = base * (1 + speed_factor).
  double speed_factor = 0.0;
  std::uint32_t streams = 1;
  std::uint64_t mem_capacity = 0;
  /// Kernels this device can run; empty means every registered kernel.
  std::set<std::string> kernel_set;
  /// Charged when a SIM_FPGA device switches to a different kernel.
  double reload_penalty_ms = 0.0;
  /// Modeled host<->device bandwidth, used on the virtual clock.
  double bandwidth_gbps = 12.0;

  bool supports(const std::string& kernel) const { return kernel_set.empty() || kernel_set.count(kernel) != 0; }
  void validate() const;
};

/// duration = base * (1 + speed_factor).
std::uint64_t simulated_duration_ns(std::uint64_t base_cpu_ns, double speed_factor);

struct DeviceBuffer {
  DeviceId device = 0;
  std::uint64_t id = 0;
  std::uint64_t size = 0;

  bool valid() const { return id != 0; }
  friend bool operator==(const DeviceBuffer&, const DeviceBuffer&) = default;
};

namespace detail {
struct CompletionState {
  std::mutex m;
  std::condition_variable cv;
  bool done = false;
  std::int32_t status = 1;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
};
}  // namespace detail

/// Fires once when a launch or transfer finishes. Safe to poll or await from
/// any thread.
class CompletionToken {
 public:
  CompletionToken() = default;
  explicit CompletionToken(std::shared_ptr<detail::CompletionState> st) : st_(std::move(st)) {}

  bool valid() const { return st_ != nullptr; }
  bool done() const;
  void wait() const;
  /// Shared status word value (1 success, negative on failure).
  std::int32_t status() const;
  std::uint64_t start_ns() const;
  std::uint64_t end_ns() const;

 private:
  std::shared_ptr<detail::CompletionState> st_;
};

struct LaunchRecord {
  std::uint64_t seq = 0;
  std::uint32_t stream = 0;
  std::string kernel;
  double occupancy = 0;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
  std::uint64_t reload_ns = 0;
};

struct DeviceStats {
  std::uint64_t used_bytes = 0;
  std::uint64_t busy_ns = 0;
  std::uint64_t launches = 0;
  std::uint64_t reloads = 0;
  std::uint64_t reload_ns = 0;
  std::uint64_t last_activity_ns = 0;
  double peak_occupancy = 0;
};

/// A virtual accelerator: private memory with capacity accounting, the data
/// movement primitives (alloc/free/sync_to/sync_from/memset/devcpy) and
/// stream-based asynchronous launches under an occupancy law: at any instant
/// the occupancies of running kernels sum to at most 1, launches on one
/// stream complete in launch order, and launches on different streams may
/// overlap.
///
/// On a virtual clock the device is a discrete-event model advanced by the
/// owner through advance(); kernels run their CPU function at start and
/// complete at start + modeled duration. On a real clock each stream has a
/// worker thread that runs the function, measures it, and sleeps for the
/// speed-factor surcharge.
class Device {
 public:
  Device(DeviceDescriptor desc, const Clock& clock);
  ~Device();
  Device(const Device&) = delete;
  Device& operator=(const Device&) = delete;

  const DeviceDescriptor& descriptor() const { return desc_; }
  DeviceId id() const { return desc_.id; }

  DeviceBuffer alloc(std::uint64_t size);
  void free(const DeviceBuffer& buf);
  std::uint64_t used_bytes() const;
  bool owns(const DeviceBuffer& buf) const;
  std::span<std::byte> bytes(const DeviceBuffer& buf);

  void sync_to(const DeviceBuffer& dst, std::uint64_t offset, std::span<const std::byte> src);
  void sync_from(const DeviceBuffer& src, std::uint64_t offset, std::span<std::byte> dst);
  void devcpy(const DeviceBuffer& dst, std::uint64_t dst_offset, const DeviceBuffer& src, std::uint64_t src_offset,
              std::uint64_t len);
  void memset(const DeviceBuffer& dst, std::uint64_t offset, std::uint8_t value, std::uint64_t len);
  std::uint64_t transfer_cost_ns(std::uint64_t bytes) const;

  /// Asynchronous launch. `pre_delay_ns` postpones the earliest start (used to
  /// charge implicit data movement ahead of the kernel).
  CompletionToken launch(std::uint32_t stream, const KernelImpl& kernel, std::vector<DeviceBuffer> args,
                         std::vector<std::byte> scalars, std::uint64_t pre_delay_ns = 0);

  /// Completion for a host<->device copy that has already been applied. On a
  /// virtual clock it fires after the modeled copy time on the device's copy
  /// engine; on a real clock it is complete on return.
  CompletionToken transfer(std::uint64_t bytes);

  /// Virtual clock only: earliest pending event, and firing of due events.
  std::optional<std::uint64_t> next_event_ns() const;
  bool advance();

  DeviceStats stats() const;
  void enable_launch_log(bool on);
  std::vector<LaunchRecord> launch_log() const;

 private:
  struct Storage {
    std::unique_ptr<std::byte, void (*)(void*)> data{nullptr, nullptr};
    std::uint64_t size = 0;
  };
  struct Pending {
    std::uint64_t seq;
    std::uint32_t stream;
    const KernelImpl* kernel;
    std::vector<DeviceBuffer> args;
    std::vector<std::byte> scalars;
    std::shared_ptr<detail::CompletionState> token;
    std::uint64_t ready_ns;
  };
  struct Running {
    std::uint64_t seq;
    std::uint32_t stream;
    double occupancy;
    std::uint64_t end_ns;
    std::shared_ptr<detail::CompletionState> token;
    std::size_t log_index;
  };
  struct Copy {
    std::uint64_t end_ns;
    std::shared_ptr<detail::CompletionState> token;
  };

  Storage& storage_for(const DeviceBuffer& buf);
  std::uint64_t reload_cost(const KernelImpl& kernel);
  bool occupancy_fits(const KernelImpl& kernel) const;
  std::int32_t run_kernel(const KernelImpl& kernel, const std::vector<DeviceBuffer>& args,
                          std::span<const std::byte> scalars);
  void account_busy(std::uint64_t now);
  void try_start_virtual(std::uint64_t now);
  static void complete(const std::shared_ptr<detail::CompletionState>& token, std::int32_t status,
                       std::uint64_t start, std::uint64_t end);

  void stream_worker(std::uint32_t stream);

  DeviceDescriptor desc_;
  const Clock& clock_;
  bool virtual_;

  mutable std::mutex mem_mu_;
  std::map<std::uint64_t, Storage> storage_;
  std::uint64_t next_buffer_id_ = 1;
  std::uint64_t used_ = 0;

  // Launch state, shared by both engines.
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t next_seq_ = 1;
  double occupancy_used_ = 0;
  std::size_t running_count_ = 0;
  std::string loaded_kernel_;
  DeviceStats stats_;
  bool was_active_ = false;
  std::uint64_t last_account_ns_ = 0;
  bool log_enabled_ = false;
  std::vector<LaunchRecord> log_;

  // Virtual engine.
  std::deque<Pending> pending_;
  std::vector<Running> running_;
  std::vector<bool> stream_busy_;
  std::deque<Copy> copies_;
  std::uint64_t copy_free_ns_ = 0;

  // Real engine.
  std::vector<std::deque<Pending>> stream_queues_;
  std::set<std::uint64_t> gate_waiters_;
  std::vector<std::thread> workers_;
  bool stopping_ = false;
};

}  // namespace arax::backends
