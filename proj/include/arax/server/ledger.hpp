#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "arax/backends/device.hpp"

namespace arax::server {

using backends::DeviceBuffer;
using backends::DeviceId;

enum class Residency { kUnallocated, kServerStaged, kDeviceResident, kMigrating };

std::string_view to_string(Residency r);

struct LedgerEntry {
  std::uint64_t buffer = 0;
  std::uint64_t declared_size = 0;
  std::optional<std::uint64_t> queue;  // bound queue, set by the first task that touches it
  Residency residency = Residency::kUnallocated;
  DeviceBuffer allocation;             // valid only while kDeviceResident
  std::vector<std::byte> staged;       // contents while kServerStaged / kMigrating
  std::uint32_t busy = 0;              // launched tasks using the buffer
};

struct LedgerRow {
  std::uint64_t buffer = 0;
  std::uint64_t declared_size = 0;
  std::optional<std::uint64_t> queue;
  Residency residency = Residency::kUnallocated;
  std::optional<DeviceId> device;
};

/// Server-side record of every live task buffer: requested size, the queue
/// it is bound to, and where its single valid copy lives.
class AllocationLedger {
 public:
  LedgerEntry& track(std::uint64_t buffer, std::uint64_t declared_size);
  LedgerEntry* find(std::uint64_t buffer);
  const LedgerEntry* find(std::uint64_t buffer) const;
  void erase(std::uint64_t buffer) { entries_.erase(buffer); }

  std::vector<std::uint64_t> bound_to(std::uint64_t queue) const;
  std::uint64_t realized_bytes(DeviceId device) const;
  std::vector<LedgerRow> rows() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::uint64_t, LedgerEntry> entries_;
};

}  // namespace arax::server
