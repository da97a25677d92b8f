#pragma once

#include <optional>

#include "arax/bench/metrics.hpp"
#include "arax/bench/workload.hpp"
#include "arax/server/config.hpp"
#include "arax/server/dispatch.hpp"

namespace arax::bench {

struct RunOptions {
  bool virtual_clock = true;
  /// Overrides the sharing mode of the server config.
  std::optional<server::SharingMode> mode;
  /// Tasks a queue may have outstanding before the driver retires some.
  std::uint32_t window = 256;
};

/// Runs every instance to completion on a fresh in-process server and
/// collects its metrics.
///
/// On the virtual clock one thread drives all instances and the simulation;
/// instances start exactly at their arrival time and results are
/// deterministic except for the wall-clock fields (issue latency, transfer
/// timings). On the real clock each instance runs on its own client thread
/// against the threaded server. A failed task aborts the run with kTaskFailed.
Metrics run_workload(const WorkloadSpec& spec, const server::ServerConfig& config, const RunOptions& options = {});

/// Same, with an explicit kernel table (must know every kernel the workload uses).
Metrics run_workload(const WorkloadSpec& spec, const server::ServerConfig& config, const RunOptions& options,
                     server::DispatchTable dispatch);

}  // namespace arax::bench
