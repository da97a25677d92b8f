#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "support.hpp"

using namespace arax;
using namespace arax::client;
using arax::testing::config;

namespace {

TaskStatus run(const TaskQueue& q, std::string_view kernel, std::vector<TaskArgRef> args = {},
               std::vector<std::byte> scalars = {}) {
  return a_wait(a_issue(q, {kernel, args, scalars}));
}

}  // namespace

TEST_CASE("acquire gives distinct empty queues") {
  server::Runtime rt(config(1));
  auto s = rt.open_session();
  auto q1 = a_acquire(*s);
  auto q2 = a_acquire(*s);
  CHECK(q1.id != q2.id);
  CHECK(run(q1, "noop") == TaskStatus::kSuccess);
  a_release(q1);
  a_release(q2);
}

TEST_CASE("64 queues from one session are usable concurrently") {
  server::Runtime rt(config(2));
  auto s = rt.open_session();
  std::vector<TaskQueue> qs;
  for (int i = 0; i < 64; ++i) qs.push_back(a_acquire(*s));
  std::vector<TaskHandle> hs;
  for (auto& q : qs) hs.push_back(a_issue(q, {"noop", {}, {}}));
  for (auto& h : hs) CHECK(a_wait(h) == TaskStatus::kSuccess);
  for (auto& q : qs) a_release(q);
}

TEST_CASE("release slot reuse and busy queue") {
  server::Runtime rt(config(1));
  auto s = rt.open_session();
  auto q = a_acquire(*s);
  auto h = a_issue(q, {"noop", {}, {}});
  // The task is issued but the simulation has not run yet.
  CHECK_THROWS_WITH_AS(a_release(q), "queue busy: tasks in flight", Error);
  CHECK(a_wait(h) == TaskStatus::kSuccess);
  a_release(q);
  auto q2 = a_acquire(*s);
  CHECK(shm::handle_slot(q2.id) == shm::handle_slot(q.id));
  CHECK(q2.id != q.id);
  CHECK_THROWS_AS(a_release(q), Error);
  a_release(q2);
}

TEST_CASE("allocate is lazy and zero-sized allocation fails") {
  server::ServerConfig cfg = config(1, 64ull << 20);
  server::Runtime rt(cfg);
  auto s = rt.open_session();
  CHECK_THROWS_AS(a_allocate(*s, 0), Error);
  auto big = a_allocate(*s, 1ull << 30);
  CHECK(rt.server().device_used_bytes(0) == 0);
  auto rows = rt.server().ledger_snapshot();
  auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.buffer == big.id; });
  REQUIRE(it != rows.end());
  CHECK(it->declared_size == (1ull << 30));
  CHECK_FALSE(it->queue.has_value());
  CHECK_FALSE(it->device.has_value());

  auto q = a_acquire(*s);
  const TaskArgRef arg{big, ArgDirection::kInOut};
  CHECK(run(q, "vec_increment", {arg}) == TaskStatus::kDeviceOOM);
  CHECK(rt.server().device_used_bytes(0) == 0);
  a_release(q);
  a_free(big);
}

TEST_CASE("free: device bytes, pending reference, double free") {
  server::Runtime rt(config(1));
  auto s = rt.open_session();
  auto b = a_allocate(*s, 4096);
  a_free(b);
  CHECK(rt.server().device_used_bytes(0) == 0);
  CHECK_THROWS_WITH_AS(a_free(b), "double free", Error);

  auto q = a_acquire(*s);
  auto b2 = a_allocate(*s, 4096);
  auto h = a_issue(q, {"vec_increment", std::vector<TaskArgRef>{{b2, ArgDirection::kInOut}}, {}});
  CHECK_THROWS_AS(a_free(b2), Error);
  CHECK(a_wait(h) == TaskStatus::kSuccess);
  CHECK(rt.server().device_used_bytes(0) == 4096);
  a_free(b2);
  CHECK(rt.server().device_used_bytes(0) == 0);
  a_release(q);
}

TEST_CASE("alloc/sync/compute/wait/free loop returns to baseline") {
  server::Runtime rt(config(2));
  auto s = rt.open_session();
  auto q = a_acquire(*s);
  std::vector<std::int32_t> v(256, 7);
  for (int i = 0; i < 1000; ++i) {
    auto b = a_allocate(*s, v.size() * 4);
    a_wait(a_sync_to(q, b, std::as_bytes(std::span(v))));
    const TaskArgRef arg{b, ArgDirection::kInOut};
    CHECK(run(q, "vec_increment", {arg}, backends::pack_i64({1})) == TaskStatus::kSuccess);
    a_free(b);
    const auto used = rt.server().device_used_bytes(0) + rt.server().device_used_bytes(1);
    if (used != 0) {
      FAIL("iteration " << i << " left " << used << " device bytes");
    }
  }
  a_release(q);
}

TEST_CASE("sync round trips") {
  server::Runtime rt(config(1));
  auto s = rt.open_session();
  auto q = a_acquire(*s);

  SUBCASE("4 KiB pattern") {
    auto b = a_allocate(*s, 4096);
    std::vector<std::byte> src(4096, std::byte{0x5A}), dst(4096);
    CHECK(a_wait(a_sync_to(q, b, src)) == TaskStatus::kSuccess);
    CHECK(a_wait(a_sync_from(q, b, dst)) == TaskStatus::kSuccess);
    CHECK(src == dst);
    a_free(b);
  }
  SUBCASE("never written reads zero") {
    auto b = a_allocate(*s, 8192);
    std::vector<std::byte> dst(8192, std::byte{0xFF});
    CHECK(a_wait(a_sync_from(q, b, dst)) == TaskStatus::kSuccess);
    CHECK(std::all_of(dst.begin(), dst.end(), [](std::byte x) { return x == std::byte{0}; }));
    a_free(b);
  }
  SUBCASE("oversize source and destination") {
    auto b = a_allocate(*s, 16);
    std::vector<std::byte> big(17);
    CHECK_THROWS_AS(a_sync_to(q, b, big), Error);
    CHECK_THROWS_AS(a_sync_from(q, b, big), Error);
    a_free(b);
    CHECK_THROWS_AS(a_sync_to(q, b, std::span<const std::byte>(big).first(4)), Error);
  }
  SUBCASE("64 MiB random payload through a noop") {
    const std::size_t n = 64ull << 20;
    auto b = a_allocate(*s, n);
    std::vector<std::uint64_t> words(n / 8);
    std::mt19937_64 rng(42);
    for (auto& w : words) w = rng();
    auto src = std::as_bytes(std::span(words));
    std::vector<std::byte> dst(n);
    a_wait(a_sync_to(q, b, src));
    CHECK(run(q, "noop", {TaskArgRef{b, ArgDirection::kInOut}}) == TaskStatus::kSuccess);
    CHECK(a_wait(a_sync_from(q, b, dst)) == TaskStatus::kSuccess);
    // Checksum oracle computed independently on both sides.
    auto fnv = [](std::span<const std::byte> p) {
      std::uint64_t h = 1469598103934665603ull;
      for (auto c : p) h = (h ^ static_cast<std::uint8_t>(c)) * 1099511628211ull;
      return h;
    };
    CHECK(fnv(src) == fnv(dst));
    a_free(b);
  }
  a_release(q);
}

TEST_CASE("issue: unknown kernel and dead handles") {
  server::Runtime rt(config(1));
  auto s = rt.open_session();
  auto q = a_acquire(*s);
  CHECK(run(q, "no_such_kernel") == TaskStatus::kUnknownKernel);
  CHECK_THROWS_AS(a_issue(q, {"", {}, {}}), Error);
  auto b = a_allocate(*s, 64);
  a_free(b);
  const TaskArgRef arg{b, ArgDirection::kIn};
  CHECK_THROWS_AS(a_issue(q, {"noop", std::span(&arg, 1), {}}), Error);
  std::vector<std::byte> huge(4097);
  CHECK_THROWS_AS(a_issue(q, {"noop", {}, huge}), Error);
  a_release(q);
}

TEST_CASE("increment chain gives 101 for any device count") {
  for (std::size_t devices : {1, 2, 3}) {
    server::Runtime rt(config(devices));
    auto s = rt.open_session();
    auto q = a_acquire(*s);
    auto b = a_allocate(*s, 4);
    std::int32_t one = 1;
    a_sync_to(q, b, std::as_bytes(std::span(&one, 1)));
    const TaskArgRef arg{b, ArgDirection::kInOut};
    const auto delta = backends::pack_i64({1});
    for (int i = 0; i < 100; ++i) a_issue(q, {"vec_increment", std::span(&arg, 1), delta});
    std::int32_t out = 0;
    CHECK(a_wait(a_sync_from(q, b, std::as_writable_bytes(std::span(&out, 1)))) == TaskStatus::kSuccess);
    CHECK(out == 101);
  }
}

TEST_CASE("wait: completed task, long kernel, double wait") {
  server::Runtime rt(config(1));
  auto s = rt.open_session();
  auto q = a_acquire(*s);
  auto h = a_issue(q, {"noop", {}, {}});
  rt.drain();
  CHECK(a_wait(h) == TaskStatus::kSuccess);
  CHECK_THROWS_AS(a_wait(h), Error);

  // 50 ms simulated kernel: grid_relax cost is 20 us + nx*ny*iters ns.
  auto in = a_allocate(*s, 100 * 100 * 4);
  auto out = a_allocate(*s, 100 * 100 * 4);
  const std::vector<TaskArgRef> args{{out, ArgDirection::kOut}, {in, ArgDirection::kIn}};
  const std::uint64_t t0 = rt.clock().now_ns();
  TaskTiming timing;
  CHECK(a_wait(a_issue(q, {"grid_relax", args, backends::pack_i64({100, 100, 5000})}), &timing) ==
        TaskStatus::kSuccess);
  CHECK(timing.end_ns - t0 >= 50 * kNsPerMs);
  CHECK(rt.clock().now_ns() >= t0 + 50 * kNsPerMs);
}

TEST_CASE("1000 tasks over 4 queues complete in issue order per queue") {
  server::Runtime rt(config(2));
  auto s = rt.open_session();
  std::vector<TaskQueue> qs;
  for (int i = 0; i < 4; ++i) qs.push_back(a_acquire(*s));
  std::mt19937 rng(7);
  std::vector<TaskHandle> hs;
  for (int i = 0; i < 1000; ++i) hs.push_back(a_issue(qs[rng() % 4], {"noop", {}, {}}));
  for (auto& h : hs) CHECK(a_wait(h) == TaskStatus::kSuccess);
  std::map<std::uint64_t, std::uint64_t> last;
  std::size_t completions = 0;
  for (const auto& ev : rt.server().events()) {
    if (ev.kind != server::EventKind::kComplete) continue;
    ++completions;
    CHECK(ev.sequence == last[ev.queue] + 1);
    last[ev.queue] = ev.sequence;
  }
  CHECK(completions == 1000);
}

TEST_CASE("closing a session releases everything once") {
  server::Runtime rt(config(1));
  {
    auto s = rt.open_session();
    auto q = a_acquire(*s);
    auto b = a_allocate(*s, 1024);
    a_issue(q, {"vec_increment", std::vector<TaskArgRef>{{b, ArgDirection::kInOut}}, {}});
    s->close();
    CHECK(s->closed());
  }
  CHECK(rt.server().ledger_snapshot().empty());
  CHECK(rt.server().device_used_bytes(0) == 0);
  const auto& dir = rt.arena().directory();
  for (const auto& q : dir.queues) CHECK(q.state.load() == 0u);
}
