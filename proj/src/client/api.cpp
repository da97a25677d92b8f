#include "arax/client/api.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <new>

#include "arax/common/backoff.hpp"
#include "arax/common/error.hpp"
#include "arax/shm/ring_queue.hpp"

namespace arax::client {

using shm::SharedLock;
using shm::SlotState;
using shm::TaskDescriptor;
using shm::TaskKind;

namespace {

constexpr auto kLive = static_cast<std::uint32_t>(SlotState::kLive);
constexpr auto kFree = static_cast<std::uint32_t>(SlotState::kFree);
constexpr auto kReleasing = static_cast<std::uint32_t>(SlotState::kReleasing);

}  // namespace

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "Pending";
    case TaskStatus::kSuccess: return "Success";
    case TaskStatus::kUnknownKernel: return "UnknownKernel";
    case TaskStatus::kDeviceOOM: return "DeviceOOM";
    case TaskStatus::kAborted: return "Aborted";
  }
  return "Unknown";
}

std::string default_segment_name() {
  const char* env = std::getenv("ARAX_SHM");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string("/arax");
}

Priority default_priority() {
  const char* env = std::getenv("ARAX_PRIORITY");
  if (env == nullptr) return Priority::kLow;
  const std::string_view v(env);
  if (v == "high") return Priority::kHigh;
  if (v == "low" || v.empty()) return Priority::kLow;
  throw Error(Errc::kConfig, "ARAX_PRIORITY must be high or low");
}

std::unique_ptr<Session> Session::connect(const std::string& segment, SessionOptions options) {
  auto arena = std::make_unique<shm::SharedArena>(shm::SharedArena::attach(segment));
  return std::unique_ptr<Session>(new Session(std::move(arena), std::move(options)));
}

Session::Session(shm::SharedArena& arena, SessionOptions options) : arena_(&arena), options_(std::move(options)) {
  open();
}

Session::Session(std::unique_ptr<shm::SharedArena> owned, SessionOptions options)
    : owned_arena_(std::move(owned)), arena_(owned_arena_.get()), options_(std::move(options)) {
  open();
}

Session::~Session() {
  try {
    close();
  } catch (...) {
  }
}

void Session::open() {
  priority_ = options_.priority ? *options_.priority : default_priority();
  auto& dir = arena_->directory();
  {
    SharedLock lk(dir.mutex);
    std::uint32_t slot = dir.max_sessions;
    for (std::uint32_t i = 0; i < dir.max_sessions; ++i) {
      if (dir.sessions[i].state.load(std::memory_order_acquire) == kFree) {
        slot = i;
        break;
      }
    }
    if (slot == dir.max_sessions) throw Error(Errc::kDirectoryFull, "session table full");
    auto& e = dir.sessions[slot];
    e.priority = priority_;
    e.pid = static_cast<std::int32_t>(::getpid());
    e.state.store(kLive, std::memory_order_release);
    slot_ = slot;
    cookie_base_ = (static_cast<std::uint64_t>(e.generation) << 40) ^ (static_cast<std::uint64_t>(slot) << 56) ^
                   (static_cast<std::uint64_t>(::getpid()) << 20);
  }
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
  closed_ = false;
}

void Session::close() {
  if (closed_) return;
  std::set<std::uint64_t> queues, buffers;
  {
    std::lock_guard lk(mu_);
    queues.swap(queues_);
    buffers.swap(buffers_);
  }
  auto& dir = arena_->directory();
  for (std::uint64_t q : queues) {
    auto& e = dir.queues[shm::handle_slot(q)];
    wait_for_server([&] {
      return !server_attached() ||
             e.issued.load(std::memory_order_acquire) == e.completed.load(std::memory_order_acquire);
    });
    release_queue(q, true);
  }
  for (std::uint64_t b : buffers) {
    auto& e = dir.buffers[shm::handle_slot(b)];
    wait_for_server([&] { return !server_attached() || e.inflight.load(std::memory_order_acquire) == 0; });
    free_buffer(b, true);
  }
  {
    SharedLock lk(dir.mutex);
    auto& e = dir.sessions[slot_];
    e.generation += 1;
    e.state.store(kFree, std::memory_order_release);
  }
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
  closed_ = true;
}

bool Session::server_attached() const {
  return arena_->directory().server_epoch.load(std::memory_order_acquire) != 0;
}

void Session::wait_for_server(const std::function<bool()>& done) const {
  Backoff backoff;
  while (!done()) {
    if (options_.wait_hook) {
      options_.wait_hook();
    } else {
      backoff.pause();
    }
  }
}

shm::QueueEntry& Session::queue_entry(const TaskQueue& q) const {
  return arena_->directory().queues[shm::handle_slot(q.id) % shm::kMaxQueues];
}

shm::BufferEntry& Session::buffer_entry(const TaskBuffer& b) const {
  return arena_->directory().buffers[shm::handle_slot(b.id) % shm::kMaxBuffers];
}

void Session::check_queue(const TaskQueue& q) const {
  if (closed_ || q.session != this || shm::handle_slot(q.id) >= shm::kMaxQueues) {
    throw Error(Errc::kInvalidHandle, "invalid queue handle");
  }
  const auto& e = queue_entry(q);
  if (e.state.load(std::memory_order_acquire) != kLive || e.generation != shm::handle_generation(q.id) ||
      e.session != slot_) {
    throw Error(Errc::kInvalidHandle, "invalid queue handle");
  }
}

void Session::check_buffer(const TaskBuffer& b) const {
  if (closed_ || b.session != this || shm::handle_slot(b.id) >= shm::kMaxBuffers) {
    throw Error(Errc::kDeadHandle, "dead buffer handle");
  }
  const auto& e = buffer_entry(b);
  if (e.state.load(std::memory_order_acquire) != kLive || e.generation != shm::handle_generation(b.id) ||
      e.session != slot_) {
    throw Error(Errc::kDeadHandle, "dead buffer handle");
  }
}

// ---------------------------------------------------------------------------

TaskQueue a_acquire(Session& s) {
  if (s.closed_) throw Error(Errc::kInvalidHandle, "session closed");
  auto& arena = *s.arena_;
  auto& dir = arena.directory();
  shm::ArenaAllocation ring;
  shm::RingQueue::create(arena, dir.queue_capacity, &ring);
  std::uint64_t handle = 0;
  {
    SharedLock lk(dir.mutex);
    std::uint32_t slot = dir.max_queues;
    for (std::uint32_t i = 0; i < dir.max_queues; ++i) {
      if (dir.queues[i].state.load(std::memory_order_acquire) == kFree) {
        slot = i;
        break;
      }
    }
    if (slot == dir.max_queues) {
      arena.free(ring);
      throw Error(Errc::kDirectoryFull, "directory full: no free queue slot");
    }
    auto& e = dir.queues[slot];
    e.session = s.slot_;
    e.ring = ring.offset;
    e.issued.store(0, std::memory_order_relaxed);
    e.completed.store(0, std::memory_order_relaxed);
    e.state.store(kLive, std::memory_order_release);
    handle = shm::make_handle(slot, e.generation);
  }
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
  {
    std::lock_guard lk(s.mu_);
    s.queues_.insert(handle);
  }
  return {&s, handle};
}

void Session::release_queue(std::uint64_t id, bool force) {
  auto& dir = arena_->directory();
  auto& e = dir.queues[shm::handle_slot(id)];
  const std::uint32_t gen = shm::handle_generation(id);
  shm::Offset ring = 0;
  {
    SharedLock lk(dir.mutex);
    if (e.state.load(std::memory_order_acquire) != kLive || e.generation != gen) {
      throw Error(Errc::kInvalidHandle, "invalid queue handle");
    }
    if (!force && e.issued.load(std::memory_order_acquire) != e.completed.load(std::memory_order_acquire)) {
      throw Error(Errc::kQueueBusy, "queue busy: tasks in flight");
    }
    ring = e.ring;
    e.state.store(kReleasing, std::memory_order_release);
  }
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
  wait_for_server([&] {
    return !server_attached() || e.state.load(std::memory_order_acquire) != kReleasing || e.generation != gen;
  });
  {
    SharedLock lk(dir.mutex);
    if (e.state.load(std::memory_order_acquire) == kReleasing && e.generation == gen) {
      // No server to acknowledge: finish the release ourselves.
      e.generation += 1;
      e.state.store(kFree, std::memory_order_release);
    }
  }
  arena_->free(ring);
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
}

void a_release(const TaskQueue& q) {
  if (q.session == nullptr) throw Error(Errc::kInvalidHandle, "invalid queue handle");
  Session& s = *q.session;
  s.check_queue(q);
  s.release_queue(q.id, false);
  std::lock_guard lk(s.mu_);
  s.queues_.erase(q.id);
}

TaskBuffer a_allocate(Session& s, std::uint64_t size) {
  if (s.closed_) throw Error(Errc::kInvalidHandle, "session closed");
  if (size == 0) throw Error(Errc::kInvalidArgument, "buffer size must be positive");
  auto& dir = s.arena_->directory();
  std::uint64_t handle = 0;
  {
    SharedLock lk(dir.mutex);
    std::uint32_t slot = dir.max_buffers;
    for (std::uint32_t i = 0; i < dir.max_buffers; ++i) {
      if (dir.buffers[i].state.load(std::memory_order_acquire) == kFree) {
        slot = i;
        break;
      }
    }
    if (slot == dir.max_buffers) throw Error(Errc::kDirectoryFull, "handle table full");
    auto& e = dir.buffers[slot];
    e.session = s.slot_;
    e.declared_size = size;
    e.inflight.store(0, std::memory_order_relaxed);
    e.state.store(kLive, std::memory_order_release);
    handle = shm::make_handle(slot, e.generation);
  }
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
  {
    std::lock_guard lk(s.mu_);
    s.buffers_.insert(handle);
  }
  return {&s, handle, size};
}

void Session::free_buffer(std::uint64_t id, bool force) {
  auto& dir = arena_->directory();
  auto& e = dir.buffers[shm::handle_slot(id)];
  const std::uint32_t gen = shm::handle_generation(id);
  {
    SharedLock lk(dir.mutex);
    if (e.state.load(std::memory_order_acquire) != kLive || e.generation != gen) {
      throw Error(Errc::kDoubleFree, "double free");
    }
    if (!force && e.inflight.load(std::memory_order_acquire) != 0) {
      throw Error(Errc::kBufferBusy, "buffer referenced by a pending task");
    }
    e.state.store(kReleasing, std::memory_order_release);
  }
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
  wait_for_server([&] {
    return !server_attached() || e.state.load(std::memory_order_acquire) != kReleasing || e.generation != gen;
  });
  {
    SharedLock lk(dir.mutex);
    if (e.state.load(std::memory_order_acquire) == kReleasing && e.generation == gen) {
      e.generation += 1;
      e.state.store(kFree, std::memory_order_release);
    }
  }
  dir.change_epoch.fetch_add(1, std::memory_order_acq_rel);
}

void a_free(const TaskBuffer& buf) {
  if (buf.session == nullptr || buf.session->closed_) throw Error(Errc::kDoubleFree, "double free");
  Session& s = *buf.session;
  if (shm::handle_slot(buf.id) >= shm::kMaxBuffers) throw Error(Errc::kDoubleFree, "double free");
  s.free_buffer(buf.id, false);
  std::lock_guard lk(s.mu_);
  s.buffers_.erase(buf.id);
}

// ---------------------------------------------------------------------------
// Issue path. No locks beyond the allocator's, no system calls unless the
// queue is full.

std::optional<TaskHandle> Session::submit(const TaskQueue& q, TaskKind kind, std::string_view kernel,
                                          std::span<const TaskArgRef> args, std::span<const std::byte> scalars,
                                          shm::Offset staging, std::uint64_t staging_len, bool block) {
  check_queue(q);
  if (kind == TaskKind::kCompute) {
    if (kernel.empty()) throw Error(Errc::kInvalidArgument, "kernel name must not be empty");
    if (kernel.size() >= shm::kKernelNameLen) throw Error(Errc::kInvalidArgument, "kernel name too long");
  }
  if (args.size() > shm::kMaxTaskArgs) throw Error(Errc::kInvalidArgument, "too many task arguments");
  if (scalars.size() > shm::kMaxScalarBytes) throw Error(Errc::kInvalidArgument, "scalar blob exceeds 4 KiB");
  for (const auto& a : args) check_buffer(a.buffer);

  auto& arena = *arena_;
  const auto alloc = arena.allocate(sizeof(TaskDescriptor) + scalars.size(), 64);
  auto* desc = new (arena.base() + alloc.offset) TaskDescriptor{};
  desc->kind = kind;
  desc->nargs = static_cast<std::uint32_t>(args.size());
  std::memcpy(desc->kernel_name, kernel.data(), kernel.size());
  for (std::size_t i = 0; i < args.size(); ++i) desc->args[i] = {args[i].buffer.id, args[i].direction, 0};
  if (!scalars.empty()) {
    desc->scalars = alloc.offset + sizeof(TaskDescriptor);
    desc->scalar_len = static_cast<std::uint32_t>(scalars.size());
    std::memcpy(arena.base() + desc->scalars, scalars.data(), scalars.size());
  }
  desc->staging = staging;
  desc->staging_len = staging_len;
  desc->queue = q.id;
  desc->cookie = cookie_base_ + next_cookie_.fetch_add(1, std::memory_order_relaxed);
  desc->status.store(shm::status::kPending, std::memory_order_relaxed);

  auto& qe = queue_entry(q);
  const std::uint64_t seq = qe.issued.load(std::memory_order_relaxed) + 1;
  desc->sequence = seq;
  for (const auto& a : args) buffer_entry(a.buffer).inflight.fetch_add(1, std::memory_order_acq_rel);

  shm::RingQueue ring(arena, qe.ring);
  const shm::TaskRecord rec{alloc.offset, seq, {}};
  Backoff backoff;
  while (ring.push(rec) == shm::PushResult::kFull) {
    if (!block) {
      for (const auto& a : args) buffer_entry(a.buffer).inflight.fetch_sub(1, std::memory_order_acq_rel);
      arena.free(alloc);
      return std::nullopt;
    }
    if (options_.wait_hook) {
      options_.wait_hook();
    } else {
      backoff.pause();
    }
  }
  qe.issued.fetch_add(1, std::memory_order_release);
  return TaskHandle{this, alloc.offset, desc->cookie, nullptr, 0};
}

TaskHandle a_issue(const TaskQueue& q, const Task& task) {
  if (q.session == nullptr) throw Error(Errc::kInvalidHandle, "invalid queue handle");
  return *q.session->submit(q, TaskKind::kCompute, task.kernel, task.args, task.scalars, 0, 0, true);
}

std::optional<TaskHandle> Session::try_issue(const TaskQueue& q, const Task& task) {
  return submit(q, TaskKind::kCompute, task.kernel, task.args, task.scalars, 0, 0, false);
}

TaskHandle a_sync_to(const TaskQueue& q, const TaskBuffer& buf, std::span<const std::byte> src) {
  if (q.session == nullptr) throw Error(Errc::kInvalidHandle, "invalid queue handle");
  Session& s = *q.session;
  s.check_buffer(buf);
  if (src.size() > s.buffer_entry(buf).declared_size) {
    throw Error(Errc::kOversizeTransfer, "source larger than the buffer's declared size");
  }
  shm::ArenaAllocation staging;
  if (!src.empty()) {
    staging = s.arena_->allocate(src.size(), 64);
    std::memcpy(s.arena_->base() + staging.offset, src.data(), src.size());
  }
  const TaskArgRef arg{buf, ArgDirection::kOut};
  try {
    return *s.submit(q, TaskKind::kTransferToDevice, {}, {&arg, 1}, {}, staging.offset, src.size(), true);
  } catch (...) {
    if (staging.offset != 0) s.arena_->free(staging);
    throw;
  }
}

TaskHandle a_sync_from(const TaskQueue& q, const TaskBuffer& buf, std::span<std::byte> dst) {
  if (q.session == nullptr) throw Error(Errc::kInvalidHandle, "invalid queue handle");
  Session& s = *q.session;
  s.check_buffer(buf);
  if (dst.size() > s.buffer_entry(buf).declared_size) {
    throw Error(Errc::kOversizeTransfer, "destination larger than the buffer's declared size");
  }
  shm::ArenaAllocation staging;
  if (!dst.empty()) staging = s.arena_->allocate(dst.size(), 64);
  const TaskArgRef arg{buf, ArgDirection::kIn};
  try {
    TaskHandle t = *s.submit(q, TaskKind::kTransferFromDevice, {}, {&arg, 1}, {}, staging.offset, dst.size(), true);
    t.dst = dst.data();
    t.dst_len = dst.size();
    return t;
  } catch (...) {
    if (staging.offset != 0) s.arena_->free(staging);
    throw;
  }
}

TaskStatus Session::poll(const TaskHandle& t) const {
  if (t.session != this || t.descriptor == 0 || !arena_->contains(t.descriptor, sizeof(TaskDescriptor))) {
    throw Error(Errc::kInvalidHandle, "invalid task handle");
  }
  const auto* desc = arena_->at<TaskDescriptor>(t.descriptor);
  if (desc->cookie != t.cookie) throw Error(Errc::kInvalidHandle, "invalid task handle");
  return static_cast<TaskStatus>(desc->status.load(std::memory_order_acquire));
}

TaskStatus a_wait(const TaskHandle& t, TaskTiming* timing) {
  if (t.session == nullptr || t.session->closed_) throw Error(Errc::kInvalidHandle, "invalid task handle");
  Session& s = *t.session;
  s.poll(t);
  auto& arena = *s.arena_;
  auto* desc = arena.at<TaskDescriptor>(t.descriptor);
  Backoff backoff;
  std::int32_t st;
  while ((st = desc->status.load(std::memory_order_acquire)) == shm::status::kPending) {
    if (s.options_.wait_hook) {
      s.options_.wait_hook();
    } else {
      backoff.pause();
    }
  }
  if (desc->kind == TaskKind::kTransferFromDevice && desc->staging != 0) {
    if (st == shm::status::kSuccess && t.dst != nullptr) {
      std::memcpy(t.dst, arena.base() + desc->staging, std::min(t.dst_len, desc->staging_len));
    }
    arena.free(desc->staging);
  }
  if (timing != nullptr) *timing = {desc->start_ns, desc->end_ns};
  desc->cookie = 0;
  arena.free(t.descriptor);
  return static_cast<TaskStatus>(st);
}

}  // namespace arax::client
