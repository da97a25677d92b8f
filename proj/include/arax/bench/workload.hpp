#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "arax/client/api.hpp"
#include "arax/server/config.hpp"

namespace arax::bench {

/// One operation of a queue program. `repeat` issues it that many times in a row.
struct Step {
  enum class Op { kKernel, kSyncTo, kSyncFrom };
  Op op = Op::kKernel;
  std::string kernel;                         // kKernel
  std::vector<std::uint32_t> buffers;         // queue-local buffer indices
  std::vector<client::ArgDirection> dirs;     // one per buffer (kKernel)
  std::vector<std::int64_t> scalars;          // packed as little-endian int64s
  std::uint32_t repeat = 1;

  friend bool operator==(const Step&, const Step&) = default;
};

struct QueueProgram {
  std::vector<std::uint64_t> buffers;  // sizes in bytes
  std::vector<Step> steps;
  std::uint32_t iterations = 1;

  std::uint64_t task_count() const;
  friend bool operator==(const QueueProgram&, const QueueProgram&) = default;
};

struct InstanceSpec {
  std::string name;
  shm::Priority priority = shm::Priority::kLow;
  std::uint64_t arrival_ns = 0;
  std::vector<QueueProgram> queues;

  friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

struct TransferSweep {
  std::vector<std::uint64_t> sizes;
  std::uint32_t reps = 5;

  friend bool operator==(const TransferSweep&, const TransferSweep&) = default;
};

/// A set of concurrently running application instances.
struct WorkloadSpec {
  std::string name;
  std::uint64_t seed = 1;  // initial buffer contents
  std::map<std::string, double> occupancy;  // per-kernel overrides
  std::vector<InstanceSpec> instances;
  TransferSweep transfers;

  std::uint64_t task_count() const;
  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// Workload file (JSON):
///
///   {"name": "demo", "seed": 1, "occupancy": {"gaussian_step": 0.25},
///    "transfer_sweep": {"sizes": ["4KiB", "64MiB"], "reps": 5},
///    "instances": [
///      {"name": "A", "priority": "low", "arrival_ms": 0,
///       "queues": [{"buffers": ["77KiB"], "iterations": 1, "steps": [
///          {"op": "sync_to", "buffer": 0},
///          {"op": "kernel", "kernel": "gaussian_step", "args": [[0, "inout"]],
///           "scalars": [141, 0], "repeat": 200},
///          {"op": "sync_from", "buffer": 0}]}]}]}
///
/// Throws kConfig on malformed input.
WorkloadSpec parse_workload(std::string_view json_text);
WorkloadSpec load_workload(const std::string& path);
std::string workload_to_json(const WorkloadSpec& spec);

/// Throws kUnknownKernel when a step names a kernel the table does not know,
/// kConfig on out-of-range buffer indices.
void validate_workload(const WorkloadSpec& spec, const server::DispatchTable& dispatch);

/// launch_overhead, transfer_sweep, sharing_2x, sharing_4x, elastic_priority,
/// migration_stress, hetero_elastic. Throws kUnknownScenario.
WorkloadSpec scenario(std::string_view name);
const std::vector<std::string>& scenario_names();
/// The server configuration each scenario is meant to run against.
server::ServerConfig scenario_config(std::string_view name);

/// The same workload keeping only instances of one priority.
WorkloadSpec only_priority(WorkloadSpec spec, shm::Priority priority);
/// The same workload with a kernel's occupancy overridden.
WorkloadSpec with_occupancy(WorkloadSpec spec, const std::string& kernel, double occupancy);

}  // namespace arax::bench
