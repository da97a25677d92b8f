#pragma once

// Application-facing runtime API. Everything here works on opaque handles
// over the shared segment; nothing reveals which device runs a task or how
// many devices exist.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "arax/shm/arena.hpp"
#include "arax/shm/layout.hpp"

namespace arax::client {

enum class TaskStatus : std::int32_t {
  kPending = shm::status::kPending,
  kSuccess = shm::status::kSuccess,
  kUnknownKernel = shm::status::kUnknownKernel,
  kDeviceOOM = shm::status::kDeviceOOM,
  kAborted = shm::status::kAborted,
};

std::string_view to_string(TaskStatus s);

using shm::ArgDirection;
using shm::Priority;

class Session;

struct TaskQueue {
  Session* session = nullptr;
  std::uint64_t id = 0;
};

struct TaskBuffer {
  Session* session = nullptr;
  std::uint64_t id = 0;
  std::uint64_t size = 0;
};

struct TaskHandle {
  Session* session = nullptr;
  shm::Offset descriptor = 0;
  std::uint64_t cookie = 0;
  std::byte* dst = nullptr;  // a_sync_from destination, filled at a_wait
  std::uint64_t dst_len = 0;
};

struct TaskArgRef {
  TaskBuffer buffer;
  ArgDirection direction = ArgDirection::kInOut;
};

/// A compute task: kernel name, buffer arguments, opaque scalar blob.
struct Task {
  std::string_view kernel;
  std::span<const TaskArgRef> args;
  std::span<const std::byte> scalars;
};

/// Server-stamped execution interval of a finished task (clock of the
/// server, nanoseconds).
struct TaskTiming {
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
};

struct SessionOptions {
  /// Defaults to ARAX_PRIORITY (high|low), else low.
  std::optional<Priority> priority;
  /// Called instead of sleeping while a call waits on the server. Used to
  /// drive an in-process simulated server.
  std::function<void()> wait_hook;
};

/// Segment name from ARAX_SHM, or "/arax".
std::string default_segment_name();
/// Priority from ARAX_PRIORITY.
Priority default_priority();

/// A client's attachment to the runtime. Releasing (or destroying) a session
/// releases every queue and buffer it still owns, exactly once.
class Session {
 public:
  /// Attaches to a named segment created by the server process.
  static std::unique_ptr<Session> connect(const std::string& segment = default_segment_name(),
                                          SessionOptions options = {});

  /// Uses an arena owned by someone else (same-process mode).
  Session(shm::SharedArena& arena, SessionOptions options = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void close();
  bool closed() const { return closed_; }

  std::uint32_t id() const { return slot_; }
  Priority priority() const { return priority_; }
  void set_wait_hook(std::function<void()> hook) { options_.wait_hook = std::move(hook); }

  /// Non-blocking issue: nullopt if the queue is full right now.
  std::optional<TaskHandle> try_issue(const TaskQueue& q, const Task& task);
  /// Non-blocking completion check; does not consume the handle.
  TaskStatus poll(const TaskHandle& t) const;

  shm::SharedArena& arena() const { return *arena_; }

 private:
  friend TaskQueue a_acquire(Session&);
  friend void a_release(const TaskQueue&);
  friend TaskBuffer a_allocate(Session&, std::uint64_t);
  friend void a_free(const TaskBuffer&);
  friend TaskHandle a_sync_to(const TaskQueue&, const TaskBuffer&, std::span<const std::byte>);
  friend TaskHandle a_sync_from(const TaskQueue&, const TaskBuffer&, std::span<std::byte>);
  friend TaskHandle a_issue(const TaskQueue&, const Task&);
  friend TaskStatus a_wait(const TaskHandle&, TaskTiming*);

  Session(std::unique_ptr<shm::SharedArena> owned, SessionOptions options);
  void open();
  void wait_for_server(const std::function<bool()>& done) const;
  bool server_attached() const;
  shm::QueueEntry& queue_entry(const TaskQueue& q) const;
  shm::BufferEntry& buffer_entry(const TaskBuffer& b) const;
  void check_queue(const TaskQueue& q) const;
  void check_buffer(const TaskBuffer& b) const;
  std::optional<TaskHandle> submit(const TaskQueue& q, shm::TaskKind kind, std::string_view kernel,
                                   std::span<const TaskArgRef> args, std::span<const std::byte> scalars,
                                   shm::Offset staging, std::uint64_t staging_len, bool block);
  void release_queue(std::uint64_t id, bool force);
  void free_buffer(std::uint64_t id, bool force);

  std::unique_ptr<shm::SharedArena> owned_arena_;
  shm::SharedArena* arena_ = nullptr;
  SessionOptions options_;
  Priority priority_ = Priority::kLow;
  std::uint32_t slot_ = 0;
  std::uint64_t cookie_base_ = 0;
  std::atomic<std::uint64_t> next_cookie_{1};
  bool closed_ = true;

  mutable std::mutex mu_;
  std::set<std::uint64_t> queues_;
  std::set<std::uint64_t> buffers_;
};

/// Acquire a queue: an empty FIFO of dependent tasks.
TaskQueue a_acquire(Session& session);
/// Release a queue; every task issued to it must have completed.
void a_release(const TaskQueue& q);
/// Allocate a buffer. Only the size is recorded; memory is realized when an
/// executing task first touches it.
TaskBuffer a_allocate(Session& session, std::uint64_t size);
/// Free a buffer no pending task references.
void a_free(const TaskBuffer& buf);
/// Copy `src` into the buffer (asynchronous; `src` may be reused on return).
TaskHandle a_sync_to(const TaskQueue& q, const TaskBuffer& buf, std::span<const std::byte> src);
/// Read the buffer into `dst`; `dst` is filled by a_wait.
TaskHandle a_sync_from(const TaskQueue& q, const TaskBuffer& buf, std::span<std::byte> dst);
/// Issue a compute task. Returns before execution.
TaskHandle a_issue(const TaskQueue& q, const Task& task);
/// Block until the task finished and reclaim it. A handle can be waited once.
TaskStatus a_wait(const TaskHandle& t, TaskTiming* timing = nullptr);

}  // namespace arax::client
