#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace arax::bench {

struct InstanceMetrics {
  std::string name;
  std::string priority;
  std::uint64_t arrival_ns = 0;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
  std::uint64_t turnaround_ns = 0;  // end - start
  std::uint64_t tasks = 0;
  std::uint64_t output_hash = 0;  // FNV-1a over every queue buffer after the last step

  friend bool operator==(const InstanceMetrics&, const InstanceMetrics&) = default;
};

struct DeviceMetrics {
  std::uint32_t id = 0;
  std::string name;
  std::uint64_t busy_ns = 0;
  std::uint64_t launches = 0;

  friend bool operator==(const DeviceMetrics&, const DeviceMetrics&) = default;
};

/// Median wall-clock time of one transfer size through the runtime (staged)
/// and as a plain in-memory copy (direct). The two are timed back to back in
/// each repetition; ratio is the median of the per-repetition ratios, which
/// cancels drift in memory bandwidth between repetitions.
struct TransferSample {
  std::uint64_t bytes = 0;
  std::uint64_t staged_ns = 0;
  std::uint64_t direct_ns = 0;
  double ratio = 0;  // median of staged / direct pairs

  friend bool operator==(const TransferSample&, const TransferSample&) = default;
};

struct Metrics {
  std::string workload;
  std::string mode;   // shared | timeslice
  std::string clock;  // virtual | real
  std::uint64_t seed = 0;
  std::vector<InstanceMetrics> instances;
  std::vector<DeviceMetrics> devices;
  std::vector<TransferSample> transfers;
  std::uint64_t makespan_ns = 0;
  std::uint64_t tasks = 0;
  std::uint64_t migrations = 0;
  std::uint64_t bytes_moved = 0;
  /// Wall-clock duration of each fast-path kernel issue.
  std::vector<std::uint64_t> issue_latency_ns;

  bool empty() const { return instances.empty() && devices.empty() && transfers.empty() && issue_latency_ns.empty(); }
  const InstanceMetrics* instance(std::string_view name) const;
  std::uint64_t issue_latency_median_ns() const;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// CSV, fixed column order. Rows: one `instance` row per instance, one
/// `device` row per device, one `transfer` row per transfer size, one
/// `latency` row per issue sample, then one `summary` row. Empty metrics
/// produce the header alone.
std::string to_csv(const Metrics& m);
Metrics parse_csv(std::string_view csv);
/// Writes to_csv(m) to `path`; throws kIo when the file cannot be written.
void report(const Metrics& m, const std::string& path);

extern const char* const kCsvHeader;

}  // namespace arax::bench
