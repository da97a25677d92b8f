#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arax/scheduler/assignment.hpp"
#include "arax/shm/layout.hpp"

namespace arax::sched {

enum class ElasticEvent { kIdleDeviceDetected, kHighPriorityArrival, kHighPriorityDeparture };

struct QueueView {
  QueueId queue = 0;
  std::uint32_t session = 0;
  shm::Priority priority = shm::Priority::kLow;
  std::optional<DeviceId> device;  // nullopt while unassigned
  bool has_work = false;
  /// Queues that share a buffer move together; 0 means "no group".
  std::uint64_t group = 0;
  /// Order in which the policy spread this queue out; 0 if never expanded.
  std::uint64_t expanded_order = 0;
};

struct DeviceView {
  DeviceId id = 0;
  bool idle = false;
  bool reserved_for_high = false;
};

struct ClusterView {
  std::vector<DeviceView> devices;
  std::vector<QueueView> queues;
};

/// Device the shrink step frees for an arriving high-priority session: the
/// device holding the most recently expanded low-priority queue, otherwise
/// the device with the fewest low-priority queues (highest id on ties).
/// nullopt on a single-device system or when a device is already reserved.
std::optional<DeviceId> device_to_free(const ClusterView& view);

/// The elastic policy as a pure function of the cluster state. Plans carry
/// queue/source/target only; the server fills in the buffer manifests from
/// its ledger when it executes them.
///
/// - IdleDeviceDetected: each idle, unreserved device receives one queue
///   from a low-priority session that has two or more working queues packed
///   on one device (the session's highest-numbered queue there moves).
/// - HighPriorityArrival: every low-priority queue on device_to_free() moves
///   next to its session's other queues (or to the least loaded remaining
///   device), most recently expanded first.
/// - HighPriorityDeparture: no moves; the next idle poll may expand again.
std::vector<MigrationPlan> elastic_rebalance(ElasticEvent event, const ClusterView& view);

}  // namespace arax::sched
