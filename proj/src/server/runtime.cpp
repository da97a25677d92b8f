#include "arax/server/runtime.hpp"

#include "arax/common/error.hpp"

namespace arax::server {

DispatchTable default_dispatch() {
  return DispatchTable::from_library(backends::shipped_kernels(),
                                     {DeviceType::kCpu, DeviceType::kSimGpu, DeviceType::kSimFpga});
}

Runtime::Runtime(ServerConfig config, RuntimeOptions options, std::optional<DispatchTable> dispatch) {
  if (options.virtual_clock) {
    clock_ = std::make_unique<VirtualClock>();
  } else {
    clock_ = std::make_unique<RealClock>();
  }
  arena_ = std::make_unique<shm::SharedArena>(options.segment.empty()
                                                   ? shm::SharedArena::create_local(options.arena_size)
                                                   : shm::SharedArena::create(options.segment, options.arena_size));
  DispatchTable table = dispatch ? std::move(*dispatch) : default_dispatch();
  for (const auto& [name, occ] : config.occupancy) table.set_occupancy(name, occ);
  server_ = std::make_unique<Server>(*arena_, std::move(config.devices), std::move(table), config.options, *clock_);
  server_->start();
}

Runtime::~Runtime() {
  if (server_) server_->stop();
}

std::unique_ptr<client::Session> Runtime::open_session(std::optional<shm::Priority> priority) {
  client::SessionOptions opts;
  opts.priority = priority;
  if (is_virtual()) opts.wait_hook = [this] { step_or_throw(); };
  return std::make_unique<client::Session>(*arena_, std::move(opts));
}

void Runtime::step_or_throw() {
  if (!server_->step()) throw Error(Errc::kSimulationStalled, "simulation stalled: nothing left that could complete the wait");
}

void Runtime::drain() {
  if (!is_virtual()) return;
  while (server_->step()) {
  }
}

}  // namespace arax::server
