#include "arax/server/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arax/common/error.hpp"

namespace arax::server {

using nlohmann::json;

std::uint64_t parse_size(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  const std::size_t start = i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == start) throw Error(Errc::kConfig, "bad size: " + std::string(text));
  std::uint64_t value = std::stoull(std::string(text.substr(start, i - start)));
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::string unit(text.substr(i));
  for (auto& c : unit) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::uint64_t mult = 1;
  if (unit.empty() || unit == "b") {
    mult = 1;
  } else if (unit == "k" || unit == "kib" || unit == "kb") {
    mult = 1ull << 10;
  } else if (unit == "m" || unit == "mib" || unit == "mb") {
    mult = 1ull << 20;
  } else if (unit == "g" || unit == "gib" || unit == "gb") {
    mult = 1ull << 30;
  } else {
    throw Error(Errc::kConfig, "bad size unit: " + std::string(text));
  }
  return value * mult;
}

namespace {

std::uint64_t size_field(const json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) return j.get<std::uint64_t>();
  if (j.is_string()) return parse_size(j.get<std::string>());
  throw Error(Errc::kConfig, "size must be a number or a string like \"64MiB\"");
}

DeviceDescriptor parse_device(const json& j, std::size_t index) {
  if (!j.is_object()) throw Error(Errc::kConfig, "device entry must be an object");
  DeviceDescriptor d;
  d.id = static_cast<DeviceId>(index);
  d.name = j.value("name", "dev" + std::to_string(index));
  d.type = backends::parse_device_type(j.value("type", std::string("CPU")));
  d.speed_factor = j.value("speed_factor", 0.0);
  d.streams = j.value("streams", 1u);
  if (!j.contains("mem_capacity")) throw Error(Errc::kConfig, "device " + d.name + ": mem_capacity missing");
  d.mem_capacity = size_field(j.at("mem_capacity"));
  if (j.contains("kernel_set")) {
    for (const auto& k : j.at("kernel_set")) d.kernel_set.insert(k.get<std::string>());
  }
  d.reload_penalty_ms = j.value("reload_penalty_ms", 0.0);
  d.bandwidth_gbps = j.value("bandwidth_gbps", 12.0);
  d.validate();
  return d;
}

}  // namespace

ServerConfig parse_server_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  ServerConfig cfg;
  try {
    const json* devices = &j;
    if (j.is_object()) {
      if (!j.contains("devices")) throw Error(Errc::kConfig, "config has no \"devices\" list");
      devices = &j.at("devices");
      auto& o = cfg.options;
      if (j.contains("policy")) o.policy = parse_policy(j.at("policy").get<std::string>());
      if (j.contains("sharing")) o.sharing = parse_sharing_mode(j.at("sharing").get<std::string>());
      o.threads_per_device = j.value("threads_per_device", o.threads_per_device);
      if (j.contains("quantum_ms")) o.quantum_ns = static_cast<std::uint64_t>(j.at("quantum_ms").get<double>() * kNsPerMs);
      o.force_migrate_every = j.value("force_migrate_every", o.force_migrate_every);
      if (j.contains("occupancy")) {
        for (const auto& [name, v] : j.at("occupancy").items()) cfg.occupancy[name] = v.get<double>();
      }
    }
    if (!devices->is_array()) throw Error(Errc::kConfig, "\"devices\" must be a list");
    for (std::size_t i = 0; i < devices->size(); ++i) cfg.devices.push_back(parse_device((*devices)[i], i));
  } catch (const json::exception& e) {
    throw Error(Errc::kConfig, std::string("bad config: ") + e.what());
  }
  if (cfg.devices.empty()) throw Error(Errc::kNoDevices, "no devices");
  return cfg;
}

ServerConfig load_server_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_server_config(ss.str());
}

}  // namespace arax::server
