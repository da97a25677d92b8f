#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "arax/common/error.hpp"
#include "arax/shm/layout.hpp"

namespace arax::shm {

struct ArenaAllocation {
  Offset offset = 0;
  std::uint64_t size = 0;
  std::uint64_t alignment = 0;

  friend bool operator==(const ArenaAllocation&, const ArenaAllocation&) = default;
};

struct ArenaStats {
  std::uint64_t payload_bytes = 0;  // bytes managed by the allocator
  std::uint64_t used_bytes = 0;     // live blocks, block headers included
  std::uint64_t live_allocations = 0;
  std::uint64_t free_blocks = 0;
  std::uint64_t largest_free_block = 0;
};

enum class ArenaMode {
  kShared,        // named POSIX segment, attachable from other processes
  kProcessLocal,  // anonymous mapping; shared with fork() children only
};

/// A mapped segment holding the header, the allocator state, the shared
/// directory and the allocation payload. Move-only; the creating instance
/// unlinks a named segment on destruction.
///
/// The allocator is a segregated free-list allocator with boundary tags:
/// free blocks live on per-size-class lists (power-of-two classes) and a
/// request takes the first block that fits, scanning classes upward. Freed
/// blocks coalesce with free neighbours immediately, so a trace that frees
/// everything returns to one free block. Fragmentation is bounded by the
/// split threshold (blocks smaller than 48 bytes are never split off) and by
/// alignment padding for over-aligned requests.
class SharedArena {
 public:
  static constexpr std::uint64_t kMinAlignment = 16;

  static SharedArena create(const std::string& name, std::uint64_t size);
  static SharedArena create_local(std::uint64_t size);
  static SharedArena attach(const std::string& name);

  /// Smallest size create() accepts: header, allocator state, directory and
  /// one page of payload.
  static std::uint64_t minimum_size();

  SharedArena(SharedArena&& other) noexcept;
  SharedArena& operator=(SharedArena&& other) noexcept;
  SharedArena(const SharedArena&) = delete;
  SharedArena& operator=(const SharedArena&) = delete;
  ~SharedArena();

  ArenaAllocation allocate(std::uint64_t size, std::uint64_t alignment = kMinAlignment);
  void free(const ArenaAllocation& allocation);
  void free(Offset offset);
  ArenaStats stats() const;

  const ArenaHeader& header() const { return *reinterpret_cast<const ArenaHeader*>(base_); }
  Directory& directory() const;

  std::byte* base() const { return base_; }
  std::uint64_t size() const { return size_; }
  const std::string& name() const { return name_; }
  ArenaMode mode() const { return mode_; }
  bool is_owner() const { return owner_; }

  template <class T>
  T* at(Offset offset) const {
    return reinterpret_cast<T*>(base_ + offset);
  }
  Offset offset_of(const void* p) const {
    return static_cast<Offset>(static_cast<const std::byte*>(p) - base_);
  }
  bool contains(Offset offset, std::uint64_t len) const {
    return offset <= size_ && len <= size_ - offset;
  }

 private:
  SharedArena() = default;
  void initialize(std::uint64_t size);
  void validate_header() const;
  void release() noexcept;

  std::byte* base_ = nullptr;
  std::uint64_t size_ = 0;
  std::string name_;
  ArenaMode mode_ = ArenaMode::kProcessLocal;
  bool owner_ = false;
};

/// Scoped lock over a process-shared robust mutex living in the arena. A
/// holder that died mid-section leaves the mutex recoverable, not wedged.
class SharedLock {
 public:
  explicit SharedLock(pthread_mutex_t& m);
  ~SharedLock();
  SharedLock(const SharedLock&) = delete;
  SharedLock& operator=(const SharedLock&) = delete;

 private:
  pthread_mutex_t& m_;
};

void init_shared_mutex(pthread_mutex_t& m);

}  // namespace arax::shm
