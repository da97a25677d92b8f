#include "arax/shm/arena.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <new>
#include <utility>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

namespace arax::shm {
namespace {

constexpr std::uint64_t kHeaderBytes = 16;
constexpr std::uint64_t kMinBlock = 48;
constexpr std::uint64_t kUsedBit = 1;
constexpr std::uint64_t kPrevFreeBit = 2;
constexpr std::uint64_t kFlagMask = 15;
constexpr std::uint64_t kTagSalt = 0x9e3779b97f4a7c15ull;
constexpr int kNumClasses = 32;

struct AllocatorState {
  pthread_mutex_t mutex;
  std::uint64_t payload_begin;
  std::uint64_t payload_end;  // offset of the sentinel header
  std::uint64_t used_bytes;
  std::uint64_t live_count;
  Offset free_heads[kNumClasses];
};

constexpr std::uint64_t round_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) & ~(a - 1); }

constexpr std::uint64_t kAllocatorRoot = 64;
constexpr std::uint64_t kDirectoryRoot = round_up(kAllocatorRoot + sizeof(AllocatorState), 64);
constexpr std::uint64_t kPayloadBegin = round_up(kDirectoryRoot + sizeof(Directory), 64);

constexpr std::uint64_t make_tag(std::uint64_t block) { return (block * kTagSalt) ^ kTagSalt; }

int size_class(std::uint64_t size) {
  const int log = static_cast<int>(std::bit_width(size)) - 1;
  const int cls = log - 5;
  if (cls < 0) return 0;
  return cls >= kNumClasses ? kNumClasses - 1 : cls;
}

std::string normalize_name(const std::string& name) {
  if (name.empty()) throw Error(Errc::kInvalidArgument, "empty segment name");
  return name.front() == '/' ? name : "/" + name;
}

// Raw block accessors. All arithmetic is in arena offsets.
class Blocks {
 public:
  Blocks(std::byte* base, AllocatorState& st) : base_(base), st_(st) {}

  std::uint64_t& word(std::uint64_t off) { return *reinterpret_cast<std::uint64_t*>(base_ + off); }

  std::uint64_t size(std::uint64_t b) { return word(b) & ~kFlagMask; }
  bool used(std::uint64_t b) { return (word(b) & kUsedBit) != 0; }
  bool prev_free(std::uint64_t b) { return (word(b) & kPrevFreeBit) != 0; }
  std::uint64_t& tag(std::uint64_t b) { return word(b + 8); }
  std::uint64_t& next(std::uint64_t b) { return word(b + 16); }
  std::uint64_t& prev(std::uint64_t b) { return word(b + 24); }

  void set_header(std::uint64_t b, std::uint64_t size, bool used, bool prev_free) {
    word(b) = size | (used ? kUsedBit : 0) | (prev_free ? kPrevFreeBit : 0);
    tag(b) = make_tag(b);
  }
  void set_prev_free(std::uint64_t b, bool v) {
    if (v) {
      word(b) |= kPrevFreeBit;
    } else {
      word(b) &= ~kPrevFreeBit;
    }
  }

  void make_free(std::uint64_t b, std::uint64_t size, bool prev_is_free) {
    set_header(b, size, false, prev_is_free);
    word(b + size - 8) = size;
    insert(b);
  }

  void insert(std::uint64_t b) {
    const int c = size_class(size(b));
    const Offset head = st_.free_heads[c];
    next(b) = head;
    prev(b) = 0;
    if (head != 0) prev(head) = b;
    st_.free_heads[c] = b;
  }

  void remove(std::uint64_t b) {
    const int c = size_class(size(b));
    const Offset n = next(b);
    const Offset p = prev(b);
    if (p != 0) {
      next(p) = n;
    } else {
      st_.free_heads[c] = n;
    }
    if (n != 0) prev(n) = p;
  }

 private:
  std::byte* base_;
  AllocatorState& st_;
};

}  // namespace

void init_shared_mutex(pthread_mutex_t& m) {
  pthread_mutexattr_t attr;
  pthread_mutexattr_init(&attr);
  pthread_mutexattr_setpshared(&attr, PTHREAD_PROCESS_SHARED);
  pthread_mutexattr_setrobust(&attr, PTHREAD_MUTEX_ROBUST);
  pthread_mutex_init(&m, &attr);
  pthread_mutexattr_destroy(&attr);
}

SharedLock::SharedLock(pthread_mutex_t& m) : m_(m) {
  const int rc = pthread_mutex_lock(&m_);
  if (rc == EOWNERDEAD) pthread_mutex_consistent(&m_);
}

SharedLock::~SharedLock() { pthread_mutex_unlock(&m_); }

std::uint64_t SharedArena::minimum_size() { return kPayloadBegin + 4096; }

SharedArena SharedArena::create(const std::string& name, std::uint64_t size) {
  if (size < minimum_size()) throw Error(Errc::kSizeTooSmall, "size too small");
  SharedArena arena;
  arena.name_ = normalize_name(name);
  arena.mode_ = ArenaMode::kShared;
  const int fd = ::shm_open(arena.name_.c_str(), O_CREAT | O_EXCL | O_RDWR, 0600);
  if (fd < 0) {
    if (errno == EEXIST) throw Error(Errc::kNameCollision, "segment name already in use: " + arena.name_);
    throw Error(Errc::kMappingFailed, "shm_open failed: " + std::string(std::strerror(errno)));
  }
  if (::ftruncate(fd, static_cast<off_t>(size)) != 0) {
    const int err = errno;
    ::close(fd);
    ::shm_unlink(arena.name_.c_str());
    throw Error(Errc::kMappingFailed, "ftruncate failed: " + std::string(std::strerror(err)));
  }
  void* p = ::mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  ::close(fd);
  if (p == MAP_FAILED) {
    ::shm_unlink(arena.name_.c_str());
    throw Error(Errc::kMappingFailed, "mmap failed: " + std::string(std::strerror(errno)));
  }
  arena.base_ = static_cast<std::byte*>(p);
  arena.size_ = size;
  arena.owner_ = true;
  arena.initialize(size);
  return arena;
}

SharedArena SharedArena::create_local(std::uint64_t size) {
  if (size < minimum_size()) throw Error(Errc::kSizeTooSmall, "size too small");
  SharedArena arena;
  arena.mode_ = ArenaMode::kProcessLocal;
  void* p = ::mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED | MAP_ANONYMOUS, -1, 0);
  if (p == MAP_FAILED) throw Error(Errc::kMappingFailed, "mmap failed: " + std::string(std::strerror(errno)));
  arena.base_ = static_cast<std::byte*>(p);
  arena.size_ = size;
  arena.owner_ = true;
  arena.initialize(size);
  return arena;
}

SharedArena SharedArena::attach(const std::string& name) {
  SharedArena arena;
  arena.name_ = normalize_name(name);
  arena.mode_ = ArenaMode::kShared;
  const int fd = ::shm_open(arena.name_.c_str(), O_RDWR, 0600);
  if (fd < 0) throw Error(Errc::kMappingFailed, "cannot open segment " + arena.name_ + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(fd, &st) != 0 || static_cast<std::uint64_t>(st.st_size) < sizeof(ArenaHeader)) {
    ::close(fd);
    throw Error(Errc::kMappingFailed, "segment too small to hold a header: " + arena.name_);
  }
  const auto size = static_cast<std::uint64_t>(st.st_size);
  void* p = ::mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  ::close(fd);
  if (p == MAP_FAILED) throw Error(Errc::kMappingFailed, "mmap failed: " + std::string(std::strerror(errno)));
  arena.base_ = static_cast<std::byte*>(p);
  arena.size_ = size;
  arena.validate_header();
  return arena;
}

void SharedArena::validate_header() const {
  const ArenaHeader& h = header();
  if (h.magic != kArenaMagic) throw Error(Errc::kBadMagic, "segment magic mismatch");
  if (h.version != kArenaVersion) throw Error(Errc::kVersionMismatch, "segment version mismatch");
  if (h.total_size != size_) throw Error(Errc::kMappingFailed, "segment size disagrees with header");
}

void SharedArena::initialize(std::uint64_t size) {
  auto* st = new (base_ + kAllocatorRoot) AllocatorState{};
  init_shared_mutex(st->mutex);
  st->payload_begin = kPayloadBegin;
  st->payload_end = (size - kHeaderBytes) & ~(kMinAlignment - 1);

  Blocks blocks(base_, *st);
  blocks.make_free(st->payload_begin, st->payload_end - st->payload_begin, false);
  blocks.set_header(st->payload_end, 0, true, true);

  auto* dir = new (base_ + kDirectoryRoot) Directory{};
  init_shared_mutex(dir->mutex);
  dir->max_sessions = kMaxSessions;
  dir->max_queues = kMaxQueues;
  dir->max_buffers = kMaxBuffers;
  dir->queue_capacity = kDefaultQueueCapacity;
  for (auto& s : dir->sessions) s.generation = 1;
  for (auto& q : dir->queues) q.generation = 1;
  for (auto& b : dir->buffers) b.generation = 1;

  // Header last: an attacher that sees the magic sees an initialized segment.
  auto* h = reinterpret_cast<ArenaHeader*>(base_);
  h->version = kArenaVersion;
  h->reserved = 0;
  h->total_size = size;
  h->allocator_root = kAllocatorRoot;
  h->queue_directory_root = kDirectoryRoot;
  std::atomic_thread_fence(std::memory_order_release);
  h->magic = kArenaMagic;
}

SharedArena::SharedArena(SharedArena&& other) noexcept
    : base_(std::exchange(other.base_, nullptr)),
      size_(std::exchange(other.size_, 0)),
      name_(std::move(other.name_)),
      mode_(other.mode_),
      owner_(std::exchange(other.owner_, false)) {}

SharedArena& SharedArena::operator=(SharedArena&& other) noexcept {
  if (this != &other) {
    release();
    base_ = std::exchange(other.base_, nullptr);
    size_ = std::exchange(other.size_, 0);
    name_ = std::move(other.name_);
    mode_ = other.mode_;
    owner_ = std::exchange(other.owner_, false);
  }
  return *this;
}

SharedArena::~SharedArena() { release(); }

void SharedArena::release() noexcept {
  if (base_ != nullptr) ::munmap(base_, size_);
  if (owner_ && mode_ == ArenaMode::kShared && !name_.empty()) ::shm_unlink(name_.c_str());
  base_ = nullptr;
  owner_ = false;
}

Directory& SharedArena::directory() const { return *at<Directory>(header().queue_directory_root); }

ArenaAllocation SharedArena::allocate(std::uint64_t size, std::uint64_t alignment) {
  if (size == 0) throw Error(Errc::kInvalidArgument, "zero-sized allocation");
  if (alignment == 0 || !std::has_single_bit(alignment)) {
    throw Error(Errc::kInvalidArgument, "alignment must be a power of two");
  }
  const std::uint64_t align = std::max(alignment, kMinAlignment);
  if (size > size_) throw Error(Errc::kOutOfMemory, "out of arena memory");
  const std::uint64_t need = std::max(round_up(size, kMinAlignment) + kHeaderBytes, kMinBlock);

  auto* st = at<AllocatorState>(header().allocator_root);
  SharedLock lock(st->mutex);
  Blocks blocks(base_, *st);

  for (int c = size_class(need); c < kNumClasses; ++c) {
    for (Offset b = st->free_heads[c]; b != 0; b = blocks.next(b)) {
      const std::uint64_t bsize = blocks.size(b);
      if (bsize < need) continue;
      std::uint64_t payload = round_up(b + kHeaderBytes, align);
      while (payload - kHeaderBytes - b != 0 && payload - kHeaderBytes - b < kMinBlock) payload += align;
      const std::uint64_t gap = payload - kHeaderBytes - b;
      if (gap + need > bsize) continue;

      const bool orig_prev_free = blocks.prev_free(b);
      blocks.remove(b);
      std::uint64_t start = b;
      std::uint64_t remaining = bsize;
      if (gap > 0) {
        blocks.make_free(b, gap, orig_prev_free);
        start = b + gap;
        remaining -= gap;
      }
      std::uint64_t block_size = remaining;
      if (remaining - need >= kMinBlock) {
        block_size = need;
        blocks.make_free(start + need, remaining - need, false);
      } else {
        blocks.set_prev_free(start + remaining, false);
      }
      blocks.set_header(start, block_size, true, gap > 0 ? true : orig_prev_free);
      st->used_bytes += block_size;
      st->live_count += 1;
      return ArenaAllocation{start + kHeaderBytes, size, align};
    }
  }
  throw Error(Errc::kOutOfMemory, "out of arena memory");
}

void SharedArena::free(const ArenaAllocation& allocation) { free(allocation.offset); }

void SharedArena::free(Offset offset) {
  auto* st = at<AllocatorState>(header().allocator_root);
  if (offset < st->payload_begin + kHeaderBytes || offset >= st->payload_end || offset % kMinAlignment != 0) {
    throw Error(Errc::kForeignOffset, "foreign offset");
  }
  SharedLock lock(st->mutex);
  Blocks blocks(base_, *st);
  std::uint64_t b = offset - kHeaderBytes;
  if (blocks.tag(b) != make_tag(b)) throw Error(Errc::kForeignOffset, "foreign offset");
  if (!blocks.used(b)) throw Error(Errc::kDoubleFree, "double free");

  std::uint64_t size = blocks.size(b);
  bool prev_free = blocks.prev_free(b);
  st->used_bytes -= size;
  st->live_count -= 1;
  blocks.set_header(b, size, false, prev_free);

  const std::uint64_t n = b + size;
  if (n != st->payload_end && !blocks.used(n)) {
    blocks.remove(n);
    size += blocks.size(n);
  }
  if (prev_free) {
    const std::uint64_t psize = blocks.word(b - 8);
    const std::uint64_t p = b - psize;
    blocks.remove(p);
    prev_free = blocks.prev_free(p);
    b = p;
    size += psize;
  }
  blocks.make_free(b, size, prev_free);
  blocks.set_prev_free(b + size, true);
}

ArenaStats SharedArena::stats() const {
  auto* st = at<AllocatorState>(header().allocator_root);
  SharedLock lock(st->mutex);
  Blocks blocks(base_, *st);
  ArenaStats s;
  s.payload_bytes = st->payload_end - st->payload_begin;
  s.used_bytes = st->used_bytes;
  s.live_allocations = st->live_count;
  for (int c = 0; c < kNumClasses; ++c) {
    for (Offset b = st->free_heads[c]; b != 0; b = blocks.next(b)) {
      ++s.free_blocks;
      s.largest_free_block = std::max(s.largest_free_block, blocks.size(b));
    }
  }
  return s;
}

}  // namespace arax::shm
