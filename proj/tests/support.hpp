#pragma once

// Shared fixtures for the test suites.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "arax/backends/kernel.hpp"
#include "arax/client/api.hpp"
#include "arax/server/runtime.hpp"

namespace arax::testing {

inline backends::DeviceDescriptor device(std::string name, std::uint64_t mem = 256ull << 20, std::uint32_t streams = 4,
                                         backends::DeviceType type = backends::DeviceType::kCpu) {
  backends::DeviceDescriptor d;
  d.name = std::move(name);
  d.type = type;
  d.mem_capacity = mem;
  d.streams = streams;
  return d;
}

inline server::ServerConfig config(std::size_t n_devices, std::uint64_t mem = 256ull << 20, std::uint32_t streams = 4) {
  server::ServerConfig cfg;
  for (std::size_t i = 0; i < n_devices; ++i) cfg.devices.push_back(device("d" + std::to_string(i), mem, streams));
  cfg.options.event_log = true;
  return cfg;
}

inline std::vector<std::byte> bytes_of(const std::vector<std::int32_t>& v) {
  std::vector<std::byte> out(v.size() * 4);
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

inline std::vector<std::int32_t> ints_of(const std::vector<std::byte>& b) {
  std::vector<std::int32_t> out(b.size() / 4);
  std::memcpy(out.data(), b.data(), out.size() * 4);
  return out;
}

}  // namespace arax::testing
