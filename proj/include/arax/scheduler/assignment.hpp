#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "arax/backends/device.hpp"

namespace arax::sched {

using QueueId = std::uint64_t;
using backends::DeviceId;

enum class AssignKind { kUnassigned, kAssigned, kOrphan, kReleased };

std::string_view to_string(AssignKind kind);

struct AssignState {
  AssignKind kind = AssignKind::kUnassigned;
  DeviceId device = 0;
  std::uint32_t thread = 0;
};

/// Queue -> consumer map. Transitions are restricted to
/// Unassigned -> Assigned -> (Orphan -> Assigned)* -> Released; anything else
/// throws, which is how the server catches double consumption bugs early.
class Assignment {
 public:
  void add(QueueId q);
  void assign(QueueId q, DeviceId device, std::uint32_t thread);
  void orphan(QueueId q);
  void release(QueueId q);
  void forget(QueueId q);

  const AssignState& state(QueueId q) const;
  bool contains(QueueId q) const { return states_.count(q) != 0; }
  std::vector<QueueId> queues_on(DeviceId device) const;
  const std::map<QueueId, AssignState>& all() const { return states_; }

 private:
  std::map<QueueId, AssignState> states_;
};

struct ManifestEntry {
  std::uint64_t buffer = 0;
  std::uint64_t size = 0;
};

struct MigrationPlan {
  QueueId queue = 0;
  DeviceId source = 0;
  DeviceId target = 0;
  /// Exactly the ledger entries realized for the queue on `source`.
  std::vector<ManifestEntry> manifest;

  std::uint64_t manifest_bytes() const {
    std::uint64_t total = 0;
    for (const auto& m : manifest) total += m.size;
    return total;
  }
};

enum class MigrationPhase { kOrphaned, kDraining, kMoving, kFinishing, kDone, kRolledBack };

std::string_view to_string(MigrationPhase phase);

/// Round-robin queue placement. The rotation pointer only moves when a
/// placement succeeds, and infeasible devices are skipped without consuming
/// a turn of the rotation.
class RoundRobinSelector {
 public:
  explicit RoundRobinSelector(std::size_t device_count = 0) : count_(device_count) {}

  void resize(std::size_t device_count) { count_ = device_count; }

  /// `feasible[i]` says whether device i can run the queue's first task.
  std::optional<DeviceId> select(const std::vector<bool>& feasible);

 private:
  std::size_t count_;
  std::size_t next_ = 0;
};

}  // namespace arax::sched
