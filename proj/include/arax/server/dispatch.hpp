#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "arax/backends/device.hpp"
#include "arax/backends/kernel.hpp"

namespace arax::server {

using backends::DeviceType;
using backends::KernelImpl;

/// kernel name -> device type -> implementation. Populated before the server
/// starts and read-only afterwards; returned pointers stay valid for the
/// table's lifetime.
class DispatchTable {
 public:
  /// Throws kDuplicateKernel if (name, type) is already registered.
  void register_kernel(const std::string& name, DeviceType type, KernelImpl impl);

  const KernelImpl* lookup(const std::string& name, DeviceType type) const;
  bool knows(const std::string& name) const { return table_.count(name) != 0; }
  std::set<DeviceType> types_for(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Changes the occupancy of `name` on every registered type.
  void set_occupancy(const std::string& name, double occupancy);

  /// Every kernel of `library` registered for every type in `types`.
  static DispatchTable from_library(const backends::KernelLibrary& library, const std::vector<DeviceType>& types);

 private:
  std::map<std::string, std::map<DeviceType, KernelImpl>> table_;
};

}  // namespace arax::server
