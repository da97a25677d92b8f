#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstring>

#include "shm_stress.hpp"

using namespace arax;
using namespace arax::shm;
using arax::testing::unique_segment;

TEST_CASE("header layout is bit-exact") {
  auto arena = SharedArena::create_local(64ull << 20);
  std::uint32_t magic = 0;
  std::uint16_t version = 0;
  std::uint64_t total = 0;
  std::memcpy(&magic, arena.base(), 4);
  std::memcpy(&version, arena.base() + 4, 2);
  std::memcpy(&total, arena.base() + 8, 8);
  CHECK(magic == 0x41524158u);
  // "XARA" in memory on little-endian hosts.
  CHECK(static_cast<char>(arena.base()[0]) == 'X');
  CHECK(version == 1);
  CHECK(total == (64ull << 20));
  CHECK(arena.header().allocator_root >= 32);
  CHECK(arena.header().queue_directory_root >= 32);
}

TEST_CASE("create: capacity, size too small, name collision") {
  auto arena = SharedArena::create_local(64ull << 20);
  const auto st = arena.stats();
  CHECK(st.payload_bytes > (60ull << 20));
  CHECK(st.payload_bytes < (64ull << 20));
  CHECK_THROWS_WITH_AS(SharedArena::create_local(0), "size too small", Error);
  CHECK_THROWS_AS(SharedArena::create("t0", 0), Error);

  const auto name = unique_segment("dup");
  auto a = SharedArena::create(name, 8ull << 20);
  try {
    SharedArena::create(name, 8ull << 20);
    FAIL("second create succeeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNameCollision);
  }
}

TEST_CASE("attach from a second process sees the same header and bytes") {
  const auto name = unique_segment("attach");
  auto arena = SharedArena::create(name, 8ull << 20);
  auto a = arena.allocate(256, 64);
  std::memcpy(arena.base() + a.offset, "offset portable", 16);
  const pid_t pid = ::fork();
  if (pid == 0) {
    try {
      auto view = SharedArena::attach(name);
      const bool ok = view.header().magic == kArenaMagic && view.header().version == kArenaVersion &&
                      view.header().total_size == (8ull << 20) &&
                      std::memcmp(view.base() + a.offset, "offset portable", 16) == 0;
      // Write back through the same offset.
      std::memcpy(view.base() + a.offset, "child was here!", 16);
      ::_exit(ok ? 0 : 1);
    } catch (...) {
      ::_exit(2);
    }
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(std::memcmp(arena.base() + a.offset, "child was here!", 16) == 0);
}

TEST_CASE("attach rejects a segment with the wrong magic") {
  const auto name = unique_segment("magic");
  auto arena = SharedArena::create(name, 8ull << 20);
  const std::uint32_t bogus = 0xDEADBEEF;
  std::memcpy(arena.base(), &bogus, 4);
  try {
    SharedArena::attach(name);
    FAIL("attach accepted a bad header");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kBadMagic);
  }
  std::memcpy(arena.base(), &kArenaMagic, 4);
}

TEST_CASE("allocator contracts") {
  auto arena = SharedArena::create_local(16ull << 20);
  const auto base_used = arena.stats().used_bytes;
  auto a = arena.allocate(64, 8);
  CHECK(a.offset % 8 == 0);
  auto b = arena.allocate(1024);
  auto c = arena.allocate(1024);
  CHECK((b.offset + 1024 <= c.offset || c.offset + 1024 <= b.offset));
  arena.free(b);
  auto b2 = arena.allocate(1024);
  CHECK(b2.size >= 1024);
  CHECK_THROWS_WITH_AS(arena.free(a.offset + 8), "foreign offset", Error);
  CHECK_THROWS_AS(arena.free(0), Error);
  CHECK_THROWS_AS(arena.free(arena.size() + 64), Error);
  arena.free(a);
  CHECK_THROWS_WITH_AS(arena.free(a), "double free", Error);
  arena.free(b2);
  arena.free(c);
  CHECK(arena.stats().used_bytes == base_used);
  CHECK(arena.stats().free_blocks == 1);
  CHECK_THROWS_AS(arena.allocate(32ull << 20), Error);
  CHECK_THROWS_AS(arena.allocate(16, 3), Error);
}

TEST_CASE("10000-op allocator trace vs shadow model") {
  auto arena = SharedArena::create_local(32ull << 20);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = testing::allocator_trace(arena, 10000, seed);
    CHECK(r.violations == 0);
    CHECK(r.returned_to_baseline);
  }
  // A tight arena forces OOM paths; they must not corrupt anything.
  auto small = SharedArena::create_local(SharedArena::minimum_size() + (1ull << 20));
  const auto r = testing::allocator_trace(small, 10000, 9, 65536, 512);
  CHECK(r.oom > 0);
  CHECK(r.violations == 0);
  CHECK(r.returned_to_baseline);
}

TEST_CASE("ring queue basics") {
  auto arena = SharedArena::create_local(8ull << 20);
  auto ring = RingQueue::create(arena, 4);
  CHECK_FALSE(ring.pop().has_value());
  TaskRecord r{};
  r.sequence = 1;
  CHECK(ring.push(r) == PushResult::kOk);
  CHECK(ring.occupancy() == 1);
  for (int i = 2; i <= 4; ++i) {
    r.sequence = i;
    CHECK(ring.push(r) == PushResult::kOk);
  }
  r.sequence = 5;
  CHECK(ring.push(r) == PushResult::kFull);
  CHECK(ring.peek()->sequence == 1);
  CHECK(ring.pop()->sequence == 1);
  CHECK(ring.push(r) == PushResult::kOk);
  for (std::uint64_t want = 2; want <= 5; ++want) CHECK(ring.pop()->sequence == want);
  CHECK(ring.empty());

  auto big = RingQueue::create(arena, kDefaultQueueCapacity);
  std::uint64_t next_pop = 1;
  for (std::uint64_t i = 1; i <= 10000; ++i) {
    r.sequence = i;
    if (big.push(r) == PushResult::kFull) {
      CHECK(big.pop()->sequence == next_pop++);
      CHECK(big.push(r) == PushResult::kOk);
    }
  }
  while (auto x = big.pop()) CHECK(x->sequence == next_pop++);
  CHECK(next_pop == 10001);
}

TEST_CASE("1M records across two threads") {
  const auto r = testing::ring_trace_threads(1'000'000);
  CHECK(r.ops == 1'000'000);
  CHECK(r.lost == 0);
  CHECK(r.duplicated == 0);
}

TEST_CASE("1M records across two processes") {
  const auto r = testing::ring_trace_processes(1'000'000);
  CHECK(r.ops == 1'000'000);
  CHECK(r.ok());
}

TEST_CASE("concurrent allocator traces from two processes") {
  const auto r = testing::allocator_trace_processes(50000, 77);
  CHECK(r.violations == 0);
  CHECK(r.returned_to_baseline);
}
