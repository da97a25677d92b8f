#pragma once

#include <cstdint>
#include <optional>

#include "arax/shm/arena.hpp"

namespace arax::shm {

enum class PushResult { kOk, kFull };

/// Fixed-capacity single-producer/single-consumer FIFO of task records,
/// placed in the arena and addressed by offset. A RingQueue object is only a
/// view; the producer and the consumer each build their own view over the
/// same offset.
///
/// Publication: the producer fills the slot, then advances `head` with
/// release ordering; the consumer loads `head` with acquire ordering before
/// reading the slot. The symmetric pair on `tail` hands the slot back. Neither
/// side ever blocks or enters the kernel.
class RingQueue {
 public:
  static std::uint64_t footprint(std::uint32_t capacity);

  /// Carves a ring out of the arena. The caller owns the returned allocation.
  static RingQueue create(SharedArena& arena, std::uint32_t capacity, ArenaAllocation* out = nullptr);

  RingQueue(const SharedArena& arena, Offset offset);

  PushResult push(const TaskRecord& record);
  std::optional<TaskRecord> pop();
  /// Oldest unconsumed record without consuming it (consumer side only).
  std::optional<TaskRecord> peek() const;

  std::uint32_t capacity() const { return header_->capacity; }
  std::uint64_t occupancy() const;
  bool empty() const { return occupancy() == 0; }
  std::uint64_t head() const { return header_->head.load(std::memory_order_acquire); }
  std::uint64_t tail() const { return header_->tail.load(std::memory_order_acquire); }
  Offset offset() const { return offset_; }

 private:
  TaskRecord* slot(std::uint64_t index) const { return slots_ + (index % header_->capacity); }

  RingQueueHeader* header_;
  TaskRecord* slots_;
  Offset offset_;
};

}  // namespace arax::shm
