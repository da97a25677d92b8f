#pragma once

// Randomized allocator and ring traces checked against shadow models. Used
// by the shm suite and by the acceptance gate.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "arax/shm/arena.hpp"
#include "arax/shm/ring_queue.hpp"

namespace arax::testing {

struct StressReport {
  std::uint64_t ops = 0;
  std::uint64_t violations = 0;  // overlap, out of bounds, misalignment, corrupted payload
  std::uint64_t oom = 0;
  std::uint64_t lost = 0;        // ring: records never delivered
  std::uint64_t duplicated = 0;  // ring: records delivered twice or out of order
  bool returned_to_baseline = true;
  bool ok() const { return violations == 0 && lost == 0 && duplicated == 0 && returned_to_baseline; }
};

/// Random alloc/free trace against a shadow interval map. Every live block is
/// stamped with a per-allocation tag at its first and last 8 bytes and
/// checked on free, which catches overlaps with allocations made by other
/// processes too.
inline StressReport allocator_trace(shm::SharedArena& arena, std::uint64_t ops, std::uint64_t seed,
                                    std::uint64_t max_size = 16384, std::size_t max_live = 2048) {
  StressReport r;
  const auto baseline = arena.stats().used_bytes;
  std::mt19937_64 rng(seed);
  std::map<shm::Offset, std::pair<std::uint64_t, std::uint64_t>> live;  // offset -> (size, tag)
  std::vector<shm::Offset> order;
  const std::uint64_t tag_base = seed << 32;

  auto stamp = [&](shm::Offset off, std::uint64_t size, std::uint64_t tag) {
    std::memcpy(arena.base() + off, &tag, 8);
    if (size >= 16) std::memcpy(arena.base() + off + size - 8, &tag, 8);
  };
  auto check = [&](shm::Offset off, std::uint64_t size, std::uint64_t tag) {
    std::uint64_t a = 0, b = tag;
    std::memcpy(&a, arena.base() + off, 8);
    if (size >= 16) std::memcpy(&b, arena.base() + off + size - 8, 8);
    return a == tag && b == tag;
  };

  for (std::uint64_t i = 0; i < ops; ++i) {
    ++r.ops;
    const bool do_alloc = order.empty() || (order.size() < max_live && rng() % 2 == 0);
    if (do_alloc) {
      const std::uint64_t size = 8 + rng() % max_size;
      const std::uint64_t align = std::uint64_t{8} << (rng() % 5);  // 8..128
      shm::ArenaAllocation a;
      try {
        a = arena.allocate(size, align);
      } catch (const Error& e) {
        if (e.code() != Errc::kOutOfMemory) ++r.violations;
        ++r.oom;
        continue;
      }
      if (a.offset % align != 0 || a.size < size || !arena.contains(a.offset, size)) ++r.violations;
      auto next = live.lower_bound(a.offset);
      if (next != live.end() && next->first < a.offset + size) ++r.violations;
      if (next != live.begin()) {
        auto prev = std::prev(next);
        if (prev->first + prev->second.first > a.offset) ++r.violations;
      }
      const std::uint64_t tag = tag_base | i;
      live[a.offset] = {size, tag};
      order.push_back(a.offset);
      stamp(a.offset, size, tag);
    } else {
      const std::size_t pick = rng() % order.size();
      const shm::Offset off = order[pick];
      order[pick] = order.back();
      order.pop_back();
      const auto [size, tag] = live.at(off);
      if (!check(off, size, tag)) ++r.violations;
      live.erase(off);
      arena.free(off);
    }
  }
  for (const auto off : order) {
    const auto [size, tag] = live.at(off);
    if (!check(off, size, tag)) ++r.violations;
    arena.free(off);
  }
  r.returned_to_baseline = arena.stats().used_bytes == baseline;
  return r;
}

/// Consumer half of a ring trace: expects sequences 1..n in order.
inline void consume_ring(shm::RingQueue& ring, std::uint64_t n, StressReport& r) {
  std::uint64_t expect = 1;
  while (expect <= n) {
    auto rec = ring.pop();
    if (!rec) {
      std::this_thread::yield();
      continue;
    }
    ++r.ops;
    if (rec->sequence != expect) {
      ++r.duplicated;
      if (rec->sequence > expect) r.lost += rec->sequence - expect;
      expect = rec->sequence;
    }
    if (rec->descriptor != rec->sequence * 3) ++r.duplicated;
    ++expect;
  }
  if (ring.pop()) ++r.duplicated;
}

inline void produce_ring(shm::RingQueue& ring, std::uint64_t n) {
  for (std::uint64_t i = 1; i <= n; ++i) {
    shm::TaskRecord rec{};
    rec.sequence = i;
    rec.descriptor = i * 3;
    while (ring.push(rec) == shm::PushResult::kFull) std::this_thread::yield();
  }
}

inline StressReport ring_trace_threads(std::uint64_t n, std::uint32_t capacity = 1024) {
  auto arena = shm::SharedArena::create_local(16ull << 20);
  auto ring = shm::RingQueue::create(arena, capacity);
  StressReport r;
  std::thread producer([&] {
    shm::RingQueue view(arena, ring.offset());
    produce_ring(view, n);
  });
  consume_ring(ring, n, r);
  producer.join();
  return r;
}

inline std::string unique_segment(const std::string& stem) {
  return "/arax_" + stem + "_" + std::to_string(::getpid());
}

/// The child process attaches to a named segment and produces; this process
/// consumes.
inline StressReport ring_trace_processes(std::uint64_t n, std::uint32_t capacity = 1024) {
  const auto name = unique_segment("ring");
  auto arena = shm::SharedArena::create(name, 16ull << 20);
  auto ring = shm::RingQueue::create(arena, capacity);
  StressReport r;
  const pid_t pid = ::fork();
  if (pid == 0) {
    try {
      auto mine = shm::SharedArena::attach(name);
      shm::RingQueue view(mine, ring.offset());
      produce_ring(view, n);
      ::_exit(0);
    } catch (...) {
      ::_exit(2);
    }
  }
  consume_ring(ring, n, r);
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++r.violations;
  return r;
}

/// Two processes run independent allocator traces on one named segment at
/// the same time; payload tags detect cross-process overlap.
inline StressReport allocator_trace_processes(std::uint64_t ops_per_process, std::uint64_t seed) {
  const auto name = unique_segment("alloc");
  auto arena = shm::SharedArena::create(name, 256ull << 20);
  const auto baseline = arena.stats().used_bytes;
  const pid_t pid = ::fork();
  if (pid == 0) {
    try {
      auto mine = shm::SharedArena::attach(name);
      const auto rep = allocator_trace(mine, ops_per_process, seed + 1);
      ::_exit(rep.violations == 0 ? 0 : 1);
    } catch (...) {
      ::_exit(2);
    }
  }
  auto r = allocator_trace(arena, ops_per_process, seed);
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++r.violations;
  r.ops *= 2;
  r.returned_to_baseline = arena.stats().used_bytes == baseline;
  return r;
}

}  // namespace arax::testing
