#include "arax/server/ledger.hpp"

namespace arax::server {

std::string_view to_string(Residency r) {
  switch (r) {
    case Residency::kUnallocated: return "unallocated";
    case Residency::kServerStaged: return "server-staged";
    case Residency::kDeviceResident: return "device-resident";
    case Residency::kMigrating: return "migrating";
  }
  return "?";
}

LedgerEntry& AllocationLedger::track(std::uint64_t buffer, std::uint64_t declared_size) {
  auto [it, inserted] = entries_.try_emplace(buffer);
  if (inserted) {
    it->second.buffer = buffer;
    it->second.declared_size = declared_size;
  }
  return it->second;
}

LedgerEntry* AllocationLedger::find(std::uint64_t buffer) {
  auto it = entries_.find(buffer);
  return it == entries_.end() ? nullptr : &it->second;
}

const LedgerEntry* AllocationLedger::find(std::uint64_t buffer) const {
  auto it = entries_.find(buffer);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::uint64_t> AllocationLedger::bound_to(std::uint64_t queue) const {
  std::vector<std::uint64_t> out;
  for (const auto& [id, e] : entries_) {
    if (e.queue == queue) out.push_back(id);
  }
  return out;
}

std::uint64_t AllocationLedger::realized_bytes(DeviceId device) const {
  std::uint64_t total = 0;
  for (const auto& [id, e] : entries_) {
    if (e.residency == Residency::kDeviceResident && e.allocation.device == device) total += e.allocation.size;
  }
  return total;
}

std::vector<LedgerRow> AllocationLedger::rows() const {
  std::vector<LedgerRow> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) {
    LedgerRow row{id, e.declared_size, e.queue, e.residency, std::nullopt};
    if (e.residency == Residency::kDeviceResident) row.device = e.allocation.device;
    out.push_back(row);
  }
  return out;
}

}  // namespace arax::server
