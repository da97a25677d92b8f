#include "arax/shm/ring_queue.hpp"

#include <cstring>
#include <new>

namespace arax::shm {

std::uint64_t RingQueue::footprint(std::uint32_t capacity) {
  return sizeof(RingQueueHeader) + static_cast<std::uint64_t>(capacity) * sizeof(TaskRecord);
}

RingQueue RingQueue::create(SharedArena& arena, std::uint32_t capacity, ArenaAllocation* out) {
  if (capacity == 0) throw Error(Errc::kInvalidArgument, "ring capacity must be positive");
  const ArenaAllocation a = arena.allocate(footprint(capacity), 64);
  auto* h = new (arena.base() + a.offset) RingQueueHeader{};
  h->capacity = capacity;
  h->slot_size = sizeof(TaskRecord);
  h->head.store(0, std::memory_order_relaxed);
  h->tail.store(0, std::memory_order_relaxed);
  std::memset(arena.base() + a.offset + sizeof(RingQueueHeader), 0, capacity * sizeof(TaskRecord));
  std::atomic_thread_fence(std::memory_order_release);
  if (out != nullptr) *out = a;
  return RingQueue(arena, a.offset);
}

RingQueue::RingQueue(const SharedArena& arena, Offset offset)
    : header_(arena.at<RingQueueHeader>(offset)),
      slots_(arena.at<TaskRecord>(offset + sizeof(RingQueueHeader))),
      offset_(offset) {}

PushResult RingQueue::push(const TaskRecord& record) {
  const std::uint64_t h = header_->head.load(std::memory_order_relaxed);
  const std::uint64_t t = header_->tail.load(std::memory_order_acquire);
  if (h - t >= header_->capacity) return PushResult::kFull;
  *slot(h) = record;
  header_->head.store(h + 1, std::memory_order_release);
  return PushResult::kOk;
}

std::optional<TaskRecord> RingQueue::pop() {
  const std::uint64_t t = header_->tail.load(std::memory_order_relaxed);
  const std::uint64_t h = header_->head.load(std::memory_order_acquire);
  if (t == h) return std::nullopt;
  TaskRecord r = *slot(t);
  header_->tail.store(t + 1, std::memory_order_release);
  return r;
}

std::optional<TaskRecord> RingQueue::peek() const {
  const std::uint64_t t = header_->tail.load(std::memory_order_relaxed);
  const std::uint64_t h = header_->head.load(std::memory_order_acquire);
  if (t == h) return std::nullopt;
  return *slot(t);
}

std::uint64_t RingQueue::occupancy() const {
  const std::uint64_t t = header_->tail.load(std::memory_order_acquire);
  const std::uint64_t h = header_->head.load(std::memory_order_acquire);
  return h - t;
}

}  // namespace arax::shm
