#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "arax/backends/device.hpp"
#include "arax/common/clock.hpp"
#include "arax/scheduler/assignment.hpp"
#include "arax/scheduler/elastic.hpp"
#include "arax/server/dispatch.hpp"
#include "arax/server/ledger.hpp"
#include "arax/shm/arena.hpp"
#include "arax/shm/ring_queue.hpp"

namespace arax::server {

using backends::Device;
using backends::DeviceDescriptor;

enum class Policy { kRoundRobin, kElastic };
enum class SharingMode { kShared, kTimeSlice };

Policy parse_policy(std::string_view text);
SharingMode parse_sharing_mode(std::string_view text);
std::string_view to_string(Policy p);
std::string_view to_string(SharingMode m);

struct ServerOptions {
  Policy policy = Policy::kRoundRobin;
  SharingMode sharing = SharingMode::kShared;
  std::uint32_t threads_per_device = 2;
  std::uint64_t quantum_ns = 10 * kNsPerMs;
  std::uint64_t idle_poll_ns = 10 * kNsPerMs;
  std::uint64_t idle_threshold_ns = 50 * kNsPerMs;
  /// Migrate every queue after each k completed tasks (0 = never). Test knob.
  std::uint32_t force_migrate_every = 0;
  bool event_log = false;
  /// Upper bound on the polling sleep of idle server threads (real clock).
  std::chrono::nanoseconds poll_cap = std::chrono::microseconds(200);
};

struct SynthesizedDeviceInfo {
  std::uint64_t mem_capacity = 0;
  std::uint32_t streams = 0;

  friend bool operator==(const SynthesizedDeviceInfo&, const SynthesizedDeviceInfo&) = default;
};

/// Component-wise minimum over the roster; throws kNoDevices if empty.
SynthesizedDeviceInfo synthesized_device_info(const std::vector<DeviceDescriptor>& devices);

enum class EventKind { kAssign, kPop, kComplete, kOrphan, kMove, kRollback, kRelease };

std::string_view to_string(EventKind kind);

struct ServerEvent {
  std::uint64_t time_ns = 0;
  EventKind kind = EventKind::kPop;
  std::uint64_t queue = 0;
  std::uint64_t sequence = 0;
  DeviceId device = 0;
  std::uint32_t thread = 0;
  std::int32_t status = 0;
};

struct MigrationRecord {
  sched::MigrationPlan plan;
  std::string reason;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
  std::uint64_t source_used_before = 0;
  std::uint64_t source_used_after = 0;  // right after the source copies were freed
  bool rolled_back = false;
};

struct ServerStats {
  std::uint64_t tasks_completed = 0;
  std::uint64_t tasks_failed = 0;
  std::uint64_t migrations = 0;
  std::uint64_t rollbacks = 0;
  std::uint64_t bytes_moved = 0;
};

/// Result of a single-valid-copy audit across the ledger and the devices.
struct LedgerAudit {
  bool ok = true;
  std::string problem;
};

/// The runtime server. It watches the shared directory for queues and
/// buffers, assigns non-empty queues to devices, realizes buffers lazily,
/// executes each queue strictly in order, and migrates queues between
/// devices.
///
/// Two execution modes share all of the logic:
///  - real clock: start() spawns a scheduler thread plus `threads_per_device`
///    accelerator threads per device; clients run concurrently.
///  - virtual clock: nothing is spawned; the owner drives the simulation with
///    step(), which performs all ready work and otherwise jumps the clock to
///    the next event.
class Server {
 public:
  Server(shm::SharedArena& arena, std::vector<DeviceDescriptor> devices, DispatchTable dispatch,
         ServerOptions options, Clock& clock);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();

  /// Virtual clock: one round of scheduling and accelerator work at the
  /// current instant. Returns whether anything changed.
  bool pump();
  /// Virtual clock: pump(), or advance the clock to the next event when
  /// nothing is ready. Returns false when nothing can ever happen again.
  bool step();
  std::optional<std::uint64_t> next_event_ns() const;

  Clock& clock() const { return clock_; }
  const ServerOptions& options() const { return options_; }

  SynthesizedDeviceInfo synthesized_device_info() const;
  std::size_t device_count() const { return devices_.size(); }
  const DeviceDescriptor& device_descriptor(DeviceId id) const { return devices_.at(id).dev->descriptor(); }
  std::uint64_t device_used_bytes(DeviceId id) const;
  backends::DeviceStats device_stats(DeviceId id) const;
  std::vector<backends::LaunchRecord> launch_log(DeviceId id) const;
  void enable_launch_log(bool on);

  /// Refreshes the directory view first, so a buffer allocated a moment ago
  /// is listed even if the scheduler has not polled yet.
  std::vector<LedgerRow> ledger_snapshot();
  LedgerAudit audit_ledger() const;

  std::vector<ServerEvent> events() const;
  std::vector<MigrationRecord> migrations() const;
  ServerStats stats() const;

  /// Introspection for tests and the bench driver (never exposed to clients).
  std::optional<DeviceId> queue_device(std::uint64_t queue) const;
  sched::AssignKind queue_state(std::uint64_t queue) const;

  /// Starts migrating `queue` to `target`; false if it is not currently
  /// assigned (unassigned, already migrating, or the same device).
  bool request_migration(std::uint64_t queue, DeviceId target, const std::string& reason = "manual");

  /// Overrides the occupancy of a kernel on every device type (sharing_4x
  /// occupancy-1.0 variant). Only valid before any task ran.
  void override_occupancy(const std::string& kernel, double occupancy);

 private:
  struct Inflight {
    shm::TaskRecord record;
    shm::TaskDescriptor* desc = nullptr;
    backends::CompletionToken token;
    std::vector<std::uint64_t> busy;  // ledger entries pinned by this launch
  };
  struct QueueState {
    std::uint64_t handle = 0;
    std::uint32_t session = 0;
    shm::Priority priority = shm::Priority::kLow;
    shm::RingQueue ring;
    std::uint32_t stream = 0;
    std::optional<Inflight> inflight;
    std::uint64_t completed_since_move = 0;
    std::uint64_t expanded_order = 0;
    bool release_pending = false;
    bool has_work() const { return inflight.has_value() || !ring.empty(); }
  };
  struct MigrationJob {
    MigrationRecord record;
    sched::MigrationPhase phase = sched::MigrationPhase::kOrphaned;
    DeviceId final_device = 0;
    std::uint64_t ready_ns = 0;
  };
  struct DeviceState {
    std::unique_ptr<Device> dev;
    std::uint32_t next_thread = 0;
    std::uint32_t next_stream = 0;
    std::optional<std::uint64_t> active_queue;  // time-slice mode
    std::uint64_t slice_end_ns = 0;
    bool reserved_for_high = false;
    std::uint64_t last_launch_ns = 0;
  };
  enum class Residence { kReady, kRetry, kOOM };
  enum class Step { kIdle, kProgress };

  // All private members below run with mu_ held.
  bool tick();
  bool scan_directory(bool force);
  bool process_releases();
  bool assign_pending_queues();
  bool advance_migrations();
  bool elastic_poll();
  bool timeslice_rotate();
  bool thread_step(std::uint32_t thread);
  Step serve_queue_step(std::uint32_t thread, QueueState& q);
  void finalize(QueueState& q, shm::TaskDescriptor* desc, std::int32_t status,
                const std::vector<std::uint64_t>& busy, std::uint64_t start_ns, std::uint64_t end_ns);
  void fail_head(QueueState& q, const shm::TaskRecord& rec, std::int32_t status);
  Residence ensure_resident(QueueState& q, std::uint64_t buffer, DeviceId device, std::uint64_t& moved_bytes);
  /// Moves the entry's only copy to host memory (freeing any device copy) so
  /// the next realization cannot leave a stale duplicate behind.
  void enforce_single_valid_copy(LedgerEntry& e);
  void assign_queue(QueueState& q, DeviceId device);
  std::optional<DeviceId> select_device(const QueueState& q);
  std::vector<bool> feasible_devices(const QueueState& q) const;
  bool start_migration(QueueState& q, DeviceId target, const std::string& reason);
  void execute_plans(const std::vector<sched::MigrationPlan>& plans, const std::string& reason, bool expand);
  sched::ClusterView cluster_view() const;
  void handle_high_arrival();
  void spill_queue(QueueState& q);
  void log(EventKind kind, const QueueState& q, std::uint64_t sequence, std::int32_t status = 0);
  std::optional<std::string> head_kernel(const QueueState& q) const;
  shm::Directory& dir() const { return arena_.directory(); }

  void scheduler_loop();
  void accelerator_loop(std::uint32_t thread);

  shm::SharedArena& arena_;
  Clock& clock_;
  VirtualClock* vclock_ = nullptr;
  ServerOptions options_;
  DispatchTable dispatch_;

  mutable std::mutex mu_;
  std::vector<DeviceState> devices_;
  std::map<std::uint64_t, QueueState> queues_;
  sched::Assignment assignment_;
  sched::RoundRobinSelector selector_;
  AllocationLedger ledger_;
  std::map<std::uint64_t, MigrationJob> jobs_;
  std::vector<MigrationRecord> finished_migrations_;
  std::vector<ServerEvent> events_;
  ServerStats stats_;
  std::uint64_t seen_epoch_ = ~0ull;
  std::uint64_t next_poll_ns_ = 0;
  std::uint64_t expand_counter_ = 0;
  std::set<std::uint32_t> high_sessions_;
  std::set<std::uint64_t> buffer_frees_;

  std::atomic<bool> running_{false};
  std::vector<std::thread> threads_;
};

}  // namespace arax::server
