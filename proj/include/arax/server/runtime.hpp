#pragma once

#include <memory>
#include <optional>
#include <string>

#include "arax/client/api.hpp"
#include "arax/common/clock.hpp"
#include "arax/server/config.hpp"
#include "arax/server/server.hpp"
#include "arax/shm/arena.hpp"

namespace arax::server {

/// Every shipped kernel, registered for every device type.
DispatchTable default_dispatch();

struct RuntimeOptions {
  bool virtual_clock = true;
  std::uint64_t arena_size = 512ull << 20;
  /// Empty: process-local mapping. Otherwise a named segment other processes
  /// can attach to.
  std::string segment;
};

/// Arena, clock and server in one object: the same-process deployment used
/// by tests, the bench driver and the Python module. On a virtual clock the
/// sessions it opens drive the simulation from their wait loops; on a real
/// clock the server threads run on their own.
class Runtime {
 public:
  Runtime(ServerConfig config, RuntimeOptions options = {}, std::optional<DispatchTable> dispatch = std::nullopt);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  std::unique_ptr<client::Session> open_session(std::optional<shm::Priority> priority = std::nullopt);

  /// Virtual clock: run until nothing is left to happen. Real clock: no-op.
  void drain();
  /// Virtual clock: one simulation step; throws kSimulationStalled when the
  /// simulation cannot make progress (a waiter would block forever).
  void step_or_throw();

  Server& server() { return *server_; }
  shm::SharedArena& arena() { return *arena_; }
  Clock& clock() { return *clock_; }
  bool is_virtual() const { return clock_->is_virtual(); }

 private:
  std::unique_ptr<Clock> clock_;
  std::unique_ptr<shm::SharedArena> arena_;
  std::unique_ptr<Server> server_;
};

}  // namespace arax::server
