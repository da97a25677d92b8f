#include "arax/server/dispatch.hpp"

#include "arax/common/error.hpp"

namespace arax::server {

void DispatchTable::register_kernel(const std::string& name, DeviceType type, KernelImpl impl) {
  auto& per_type = table_[name];
  if (per_type.count(type)) {
    throw Error(Errc::kDuplicateKernel,
                "duplicate registration: " + name + " for " + std::string(backends::to_string(type)));
  }
  // Validation (occupancy range, default cost) lives in KernelLibrary::add.
  backends::KernelLibrary check;
  impl.name = name;
  check.add(impl);
  per_type.emplace(type, *check.find(name));
}

const KernelImpl* DispatchTable::lookup(const std::string& name, DeviceType type) const {
  auto it = table_.find(name);
  if (it == table_.end()) return nullptr;
  auto jt = it->second.find(type);
  return jt == it->second.end() ? nullptr : &jt->second;
}

std::set<DeviceType> DispatchTable::types_for(const std::string& name) const {
  std::set<DeviceType> out;
  auto it = table_.find(name);
  if (it != table_.end()) {
    for (const auto& [type, _] : it->second) out.insert(type);
  }
  return out;
}

std::vector<std::string> DispatchTable::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : table_) out.push_back(name);
  return out;
}

void DispatchTable::set_occupancy(const std::string& name, double occupancy) {
  auto it = table_.find(name);
  if (it == table_.end()) throw Error(Errc::kUnknownKernel, "unknown kernel: " + name);
  if (!(occupancy > 0.0 && occupancy <= 1.0)) throw Error(Errc::kInvalidArgument, "occupancy must be in (0, 1]");
  for (auto& [type, impl] : it->second) impl.occupancy = occupancy;
}

DispatchTable DispatchTable::from_library(const backends::KernelLibrary& library,
                                          const std::vector<DeviceType>& types) {
  DispatchTable t;
  for (const auto& name : library.names()) {
    for (DeviceType type : types) t.register_kernel(name, type, *library.find(name));
  }
  return t;
}

}  // namespace arax::server
