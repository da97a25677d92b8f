#pragma once

// Byte layout of the shared segment. Everything in here is read by both the
// client and the server process, so every cross-reference is an offset from
// the arena base and every type is standard-layout with fixed-width fields.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <type_traits>

#include <pthread.h>

namespace arax::shm {

using Offset = std::uint64_t;

constexpr std::uint32_t kArenaMagic = 0x41524158;  // "ARAX" read as a little-endian u32
constexpr std::uint16_t kArenaVersion = 1;

constexpr std::uint32_t kMaxSessions = 64;
constexpr std::uint32_t kMaxQueues = 256;
constexpr std::uint32_t kMaxBuffers = 8192;
constexpr std::uint32_t kMaxTaskArgs = 16;
constexpr std::uint32_t kKernelNameLen = 64;
constexpr std::uint32_t kMaxScalarBytes = 4096;
constexpr std::uint32_t kDefaultQueueCapacity = 1024;
constexpr std::uint32_t kTaskRecordSize = 64;

static_assert(std::atomic<std::uint64_t>::is_always_lock_free);
static_assert(std::atomic<std::uint32_t>::is_always_lock_free);
static_assert(std::atomic<std::int32_t>::is_always_lock_free);

/// Bytes 0..31 of every segment; all integers little-endian.
struct ArenaHeader {
  std::uint32_t magic;
  std::uint16_t version;
  std::uint16_t reserved;
  std::uint64_t total_size;
  Offset allocator_root;
  Offset queue_directory_root;
};
static_assert(sizeof(ArenaHeader) == 32);
static_assert(offsetof(ArenaHeader, version) == 4);
static_assert(offsetof(ArenaHeader, total_size) == 8);
static_assert(offsetof(ArenaHeader, allocator_root) == 16);
static_assert(offsetof(ArenaHeader, queue_directory_root) == 24);

/// One ring slot. The full descriptor lives elsewhere in the arena.
struct TaskRecord {
  Offset descriptor;
  std::uint64_t sequence;
  std::uint8_t reserved[48];
};
static_assert(sizeof(TaskRecord) == kTaskRecordSize);

struct alignas(64) RingQueueHeader {
  std::uint32_t capacity;
  std::uint32_t slot_size;
  std::uint8_t pad0[56];
  alignas(64) std::atomic<std::uint64_t> head;  // producer-owned, monotone
  alignas(64) std::atomic<std::uint64_t> tail;  // consumer-owned, monotone
};

enum class TaskKind : std::uint32_t { kCompute = 0, kTransferToDevice = 1, kTransferFromDevice = 2 };

enum class ArgDirection : std::uint32_t { kIn = 0, kOut = 1, kInOut = 2 };

struct TaskArg {
  std::uint64_t buffer;  // buffer handle (generation << 32 | slot)
  ArgDirection direction;
  std::uint32_t pad;
};

/// Status word: 0 pending, 1 success, negative values are error codes.
namespace status {
constexpr std::int32_t kPending = 0;
constexpr std::int32_t kSuccess = 1;
constexpr std::int32_t kUnknownKernel = -1;
constexpr std::int32_t kDeviceOOM = -2;
constexpr std::int32_t kAborted = -3;
}  // namespace status

struct TaskDescriptor {
  TaskKind kind;
  std::uint32_t nargs;
  char kernel_name[kKernelNameLen];
  TaskArg args[kMaxTaskArgs];
  Offset scalars;  // 0 when scalar_len == 0
  std::uint32_t scalar_len;
  std::uint32_t pad0;
  Offset staging;  // transfer payload staging in the arena
  std::uint64_t staging_len;
  std::uint64_t queue;
  std::uint64_t sequence;
  std::uint64_t issue_ns;  // stamped by the server when first observed
  std::uint64_t start_ns;
  std::uint64_t end_ns;
  std::atomic<std::int32_t> status;
  std::uint32_t pad1;
  std::uint64_t cookie;  // identifies the issuing handle; cleared when reclaimed
};
static_assert(std::is_standard_layout_v<TaskDescriptor>);

enum class SlotState : std::uint32_t { kFree = 0, kLive = 1, kReleasing = 2 };

enum class Priority : std::uint32_t { kLow = 0, kHigh = 1 };

struct SessionEntry {
  std::atomic<std::uint32_t> state;
  std::uint32_t generation;
  Priority priority;
  std::int32_t pid;
  std::uint8_t pad[48];
};

struct QueueEntry {
  std::atomic<std::uint32_t> state;
  std::uint32_t generation;
  std::uint32_t session;
  std::uint32_t pad0;
  Offset ring;
  std::atomic<std::uint64_t> issued;     // written by the client
  std::atomic<std::uint64_t> completed;  // written by the server
  std::uint8_t pad1[24];
};

struct BufferEntry {
  std::atomic<std::uint32_t> state;
  std::uint32_t generation;
  std::uint32_t session;
  std::atomic<std::uint32_t> inflight;  // tasks referencing this buffer not yet complete
  std::uint64_t declared_size;
  std::uint8_t pad[40];
};

static_assert(sizeof(SessionEntry) == 64);
static_assert(sizeof(QueueEntry) == 64);
static_assert(sizeof(BufferEntry) == 64);

/// Shared tables plus the lock serializing slot claims. The server bumps
/// `server_epoch` while attached; clients bump `change_epoch` after any
/// directory mutation so the server can skip rescans.
struct Directory {
  pthread_mutex_t mutex;
  std::atomic<std::uint64_t> server_epoch;
  std::atomic<std::uint64_t> change_epoch;
  std::uint32_t max_sessions;
  std::uint32_t max_queues;
  std::uint32_t max_buffers;
  std::uint32_t queue_capacity;
  SessionEntry sessions[kMaxSessions];
  QueueEntry queues[kMaxQueues];
  BufferEntry buffers[kMaxBuffers];
};

/// Handles pack a slot index with the slot's generation so stale handles are
/// detected after the slot is reused.
constexpr std::uint64_t make_handle(std::uint32_t slot, std::uint32_t generation) {
  return (static_cast<std::uint64_t>(generation) << 32) | slot;
}
constexpr std::uint32_t handle_slot(std::uint64_t h) { return static_cast<std::uint32_t>(h & 0xffffffffu); }
constexpr std::uint32_t handle_generation(std::uint64_t h) { return static_cast<std::uint32_t>(h >> 32); }

}  // namespace arax::shm
