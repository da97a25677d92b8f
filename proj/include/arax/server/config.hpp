#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "arax/backends/device.hpp"
#include "arax/server/server.hpp"

namespace arax::server {

/// Server configuration file (JSON):
///
///   {
///     "devices": [
///       {"name": "gpu0", "type": "SIM_GPU", "speed_factor": 0.5, "streams": 4,
///        "mem_capacity": "256MiB", "kernel_set": ["noop", "memcopy"],
///        "reload_penalty_ms": 0, "bandwidth_gbps": 12}
///     ],
///     "policy": "roundrobin",          // or "elastic"
///     "sharing": "shared",             // or "timeslice"
///     "threads_per_device": 2,
///     "quantum_ms": 10,
///     "force_migrate_every": 0,
///     "occupancy": {"grid_relax": 1.0} // per-kernel overrides
///   }
///
/// A file holding only a JSON array is read as the device list.
struct ServerConfig {
  std::vector<DeviceDescriptor> devices;
  ServerOptions options;
  std::map<std::string, double> occupancy;
};

/// "64MiB", "1 GiB", "4096", "512KiB" -> bytes.
std::uint64_t parse_size(std::string_view text);

ServerConfig parse_server_config(std::string_view json_text);
ServerConfig load_server_config(const std::string& path);

}  // namespace arax::server
