#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <thread>

#include "arax/backends/device.hpp"
#include "arax/backends/kernel.hpp"
#include "arax/common/clock.hpp"
#include "support.hpp"

using namespace arax;
using namespace arax::backends;
using arax::testing::device;

namespace {

void run_until_quiet(Device& d, VirtualClock& clock) {
  d.advance();
  while (auto t = d.next_event_ns()) {
    clock.advance_to(*t);
    d.advance();
  }
}

KernelImpl fixed_kernel(std::string name, double occupancy, std::uint64_t ns) {
  return {std::move(name), [](const KernelArgs&) {}, occupancy,
          [ns](std::span<const std::uint64_t>, std::span<const std::byte>) { return ns; }};
}

}  // namespace

TEST_CASE("device memory accounting") {
  VirtualClock clock;
  Device d(device("d", 64ull << 20), clock);
  auto a = d.alloc(1ull << 20);
  CHECK(d.used_bytes() == (1ull << 20));
  try {
    d.alloc(64ull << 20);
    FAIL("over-capacity alloc succeeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDeviceOOM);
  }
  d.free(a);
  CHECK(d.used_bytes() == 0);
  CHECK_THROWS_AS(d.free(a), Error);

  std::mt19937_64 rng(5);
  std::vector<DeviceBuffer> live;
  std::uint64_t oracle = 0;
  for (int i = 0; i < 5000; ++i) {
    if (live.empty() || rng() % 2) {
      const std::uint64_t sz = 1 + rng() % (1 << 20);
      if (oracle + sz > (64ull << 20)) {
        CHECK_THROWS_AS(d.alloc(sz), Error);
      } else {
        live.push_back(d.alloc(sz));
        oracle += sz;
      }
    } else {
      const std::size_t k = rng() % live.size();
      oracle -= live[k].size;
      d.free(live[k]);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
    }
    if (d.used_bytes() != oracle) FAIL("used " << d.used_bytes() << " != oracle " << oracle);
  }
}

TEST_CASE("movement primitives") {
  VirtualClock clock;
  Device d(device("d"), clock);
  auto a = d.alloc(4096);
  auto b = d.alloc(4096);
  std::vector<std::byte> x(4096);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::byte(i ^ 0x5A);
  d.memset(a, 0, 0x00, 4096);
  std::vector<std::byte> out(4096, std::byte{1});
  d.sync_from(a, 0, out);
  CHECK(std::all_of(out.begin(), out.end(), [](std::byte v) { return v == std::byte{0}; }));
  d.sync_to(a, 0, x);
  d.devcpy(b, 0, a, 0, 4096);
  d.sync_from(b, 0, out);
  CHECK(out == x);
  CHECK_THROWS_AS(d.sync_to(a, 4000, x), Error);
  CHECK_THROWS_AS(d.devcpy(b, 1, a, 0, 4096), Error);

  auto other_desc = device("e");
  other_desc.id = 1;
  Device other(other_desc, clock);
  auto c = other.alloc(4096);
  CHECK_THROWS_AS(d.devcpy(c, 0, a, 0, 16), Error);
}

TEST_CASE("1000 random movement sequences vs byte-array reference") {
  VirtualClock clock;
  Device d(device("d"), clock);
  constexpr std::size_t kN = 2048;
  auto a = d.alloc(kN);
  auto b = d.alloc(kN);
  std::vector<std::byte> ref_a(kN), ref_b(kN);
  d.memset(a, 0, 0, kN);
  d.memset(b, 0, 0, kN);
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const bool on_a = rng() % 2;
    auto& buf = on_a ? a : b;
    auto& ref = on_a ? ref_a : ref_b;
    const std::size_t off = rng() % kN;
    const std::size_t len = rng() % (kN - off + 1);
    switch (rng() % 3) {
      case 0: {
        std::vector<std::byte> src(len);
        for (auto& v : src) v = std::byte(rng());
        d.sync_to(buf, off, src);
        std::copy(src.begin(), src.end(), ref.begin() + static_cast<std::ptrdiff_t>(off));
        break;
      }
      case 1: {
        const auto v = static_cast<std::uint8_t>(rng());
        d.memset(buf, off, v, len);
        std::fill_n(ref.begin() + static_cast<std::ptrdiff_t>(off), len, std::byte(v));
        break;
      }
      default: {
        auto& src = on_a ? b : a;
        auto& src_ref = on_a ? ref_b : ref_a;
        const std::size_t soff = rng() % (kN - len + 1);
        d.devcpy(buf, off, src, soff, len);
        std::copy_n(src_ref.begin() + static_cast<std::ptrdiff_t>(soff), len,
                    ref.begin() + static_cast<std::ptrdiff_t>(off));
        break;
      }
    }
  }
  std::vector<std::byte> img(kN);
  d.sync_from(a, 0, img);
  CHECK(img == ref_a);
  d.sync_from(b, 0, img);
  CHECK(img == ref_b);
}

TEST_CASE("occupancy law: overlap vs serialization") {
  const std::uint64_t dur = 10 * kNsPerMs;
  for (double occ : {0.25, 1.0}) {
    VirtualClock clock;
    Device d(device("d", 64ull << 20, 2), clock);
    d.enable_launch_log(true);
    auto k = fixed_kernel("k", occ, dur);
    auto t1 = d.launch(0, k, {}, {});
    auto t2 = d.launch(1, k, {}, {});
    run_until_quiet(d, clock);
    REQUIRE(t1.done());
    REQUIRE(t2.done());
    const auto makespan = std::max(t1.end_ns(), t2.end_ns());
    if (occ < 1.0) {
      CHECK(makespan <= dur * 12 / 10);
      CHECK(d.stats().peak_occupancy == doctest::Approx(0.5));
    } else {
      CHECK(makespan >= 2 * dur);
      CHECK(makespan <= 2 * dur * 12 / 10);
      CHECK(d.stats().peak_occupancy == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("stream FIFO and occupancy sum under random launches") {
  VirtualClock clock;
  Device d(device("d", 64ull << 20, 4), clock);
  d.enable_launch_log(true);
  std::mt19937 rng(3);
  std::vector<KernelImpl> ks;
  for (int i = 0; i < 5; ++i) ks.push_back(fixed_kernel("k" + std::to_string(i), 0.1 + 0.2 * i, 1000 + 700 * i));
  std::vector<std::pair<std::uint32_t, CompletionToken>> toks;
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t s = rng() % 4;
    toks.emplace_back(s, d.launch(s, ks[rng() % ks.size()], {}, {}));
  }
  run_until_quiet(d, clock);
  std::vector<std::uint64_t> last_end(4, 0);
  for (const auto& [s, t] : toks) {
    REQUIRE(t.done());
    CHECK(t.end_ns() >= last_end[s]);
    last_end[s] = t.end_ns();
  }
  const auto log = d.launch_log();
  REQUIRE(log.size() == 200);
  // Sweep the start/end events and check the running occupancy sum.
  std::vector<std::pair<std::uint64_t, double>> edges;
  for (const auto& r : log) {
    edges.emplace_back(r.start_ns, r.occupancy);
    edges.emplace_back(r.end_ns, -r.occupancy);
  }
  std::sort(edges.begin(), edges.end(), [](auto& x, auto& y) {
    return x.first != y.first ? x.first < y.first : x.second < y.second;
  });
  double sum = 0;
  for (const auto& [t, o] : edges) {
    sum += o;
    CHECK(sum <= 1.0 + 1e-9);
  }
}

TEST_CASE("kernel_set and speed factor") {
  VirtualClock clock;
  auto desc = device("d");
  desc.kernel_set = {"a"};
  Device d(desc, clock);
  auto b = fixed_kernel("b", 0.25, 1000);
  try {
    d.launch(0, b, {}, {});
    FAIL("unsupported kernel launched");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kKernelUnsupported);
  }
  CHECK(simulated_duration_ns(1000, 0.0) == 1000);
  CHECK(simulated_duration_ns(1000, 1.0) == 2000);

  auto slow_desc = device("s");
  slow_desc.speed_factor = 1.0;
  Device slow(slow_desc, clock);
  auto a = fixed_kernel("a", 0.25, 5000);
  const auto t0 = clock.now_ns();
  auto t = slow.launch(0, a, {}, {});
  run_until_quiet(slow, clock);
  CHECK(t.end_ns() - t0 == 10000);
}

TEST_CASE("real clock: speed factor stretches measured time") {
  RealClock clock;
  auto k = KernelImpl{"sleepy", [](const KernelArgs&) { std::this_thread::sleep_for(std::chrono::milliseconds(20)); },
                      0.25, [](std::span<const std::uint64_t>, std::span<const std::byte>) { return 0ull; }};
  for (double sf : {0.0, 1.0}) {
    auto desc = device("r");
    desc.speed_factor = sf;
    Device d(desc, clock);
    auto t = d.launch(0, k, {}, {});
    t.wait();
    const double ms = static_cast<double>(t.end_ns() - t.start_ns()) / 1e6;
    CHECK(ms >= 20.0 * (1 + sf) * 0.95);
    CHECK(ms <= 20.0 * (1 + sf) * 1.5 + 5);
  }
}

TEST_CASE("SIM_FPGA reload penalty") {
  VirtualClock clock;
  auto desc = device("f", 64ull << 20, 1, DeviceType::kSimFpga);
  desc.reload_penalty_ms = 50;
  Device d(desc, clock);
  d.enable_launch_log(true);
  auto a = fixed_kernel("A", 0.25, 1000);
  auto b = fixed_kernel("B", 0.25, 1000);
  for (auto* k : {&a, &b, &a, &b}) d.launch(0, *k, {}, {});
  run_until_quiet(d, clock);
  std::uint64_t total = 0;
  for (const auto& r : d.launch_log()) total += r.reload_ns;
  CHECK(total >= 150 * kNsPerMs);
  CHECK(d.stats().reloads >= 3);

  // Same kernel twice in a row: no reload after the first.
  VirtualClock c2;
  Device same(desc, c2);
  same.enable_launch_log(true);
  for (int i = 0; i < 3; ++i) same.launch(0, a, {}, {});
  run_until_quiet(same, c2);
  const auto log = same.launch_log();
  CHECK(log[1].reload_ns == 0);
  CHECK(log[2].reload_ns == 0);
}

TEST_CASE("shipped kernels against reference oracles") {
  auto lib = shipped_kernels();
  CHECK(lib.find("gaussian_step")->occupancy == doctest::Approx(1.0));
  for (const char* n : {"noop", "memcopy", "vec_increment", "grid_relax", "path_dp"}) {
    CHECK(lib.find(n)->occupancy == doctest::Approx(0.25));
  }

  VirtualClock clock;
  Device d(device("d"), clock);

  SUBCASE("path_dp") {
    const std::int64_t rows = 5, cols = 6;
    std::mt19937 rng(1);
    std::vector<std::int32_t> wall(rows * cols);
    for (auto& w : wall) w = static_cast<std::int32_t>(rng() % 10);
    // Independent oracle: textbook min-path DP moving down with +-1 column.
    std::vector<std::int32_t> dp(wall.begin(), wall.begin() + cols);
    for (std::int64_t r = 1; r < rows; ++r) {
      std::vector<std::int32_t> nxt(cols);
      for (std::int64_t c = 0; c < cols; ++c) {
        std::int32_t best = dp[c];
        if (c > 0) best = std::min(best, dp[c - 1]);
        if (c + 1 < cols) best = std::min(best, dp[c + 1]);
        nxt[c] = best + wall[r * cols + c];
      }
      dp = nxt;
    }
    auto wb = d.alloc(wall.size() * 4);
    auto rb = d.alloc(cols * 4);
    d.sync_to(wb, 0, std::as_bytes(std::span(wall)));
    auto t = d.launch(0, *lib.find("path_dp"), {rb, wb}, pack_i64({rows, cols}));
    run_until_quiet(d, clock);
    CHECK(t.status() == 1);
    std::vector<std::int32_t> got(cols);
    d.sync_from(rb, 0, std::as_writable_bytes(std::span(got)));
    CHECK(got == dp);
  }
  SUBCASE("gaussian_step eliminates below the pivot") {
    const std::int64_t n = 3;
    std::vector<float> m{2, 1, 1, 4, 3, 3, 8, 7, 9};
    std::vector<float> rhs{1, 2, 3};
    auto mb = d.alloc(m.size() * 4);
    auto rb = d.alloc(rhs.size() * 4);
    d.sync_to(mb, 0, std::as_bytes(std::span(m)));
    d.sync_to(rb, 0, std::as_bytes(std::span(rhs)));
    d.launch(0, *lib.find("gaussian_step"), {mb, rb}, pack_i64({n, 0}));
    run_until_quiet(d, clock);
    d.sync_from(mb, 0, std::as_writable_bytes(std::span(m)));
    d.sync_from(rb, 0, std::as_writable_bytes(std::span(rhs)));
    CHECK(m == std::vector<float>{2, 1, 1, 0, 1, 1, 0, 3, 5});
    CHECK(rhs == std::vector<float>{1, 0, -1});
  }
  SUBCASE("grid_relax: constant field is a fixed point") {
    std::vector<float> in(16 * 16, 3.5f), out(16 * 16, 0.f);
    auto ib = d.alloc(in.size() * 4);
    auto ob = d.alloc(out.size() * 4);
    d.sync_to(ib, 0, std::as_bytes(std::span(in)));
    d.launch(0, *lib.find("grid_relax"), {ob, ib}, pack_i64({16, 16, 7}));
    run_until_quiet(d, clock);
    d.sync_from(ob, 0, std::as_writable_bytes(std::span(out)));
    for (float v : out) CHECK(v == doctest::Approx(3.5f));
  }
  SUBCASE("vec_increment") {
    std::vector<std::int32_t> v{1, -1, 100};
    auto b = d.alloc(12);
    d.sync_to(b, 0, std::as_bytes(std::span(v)));
    d.launch(0, *lib.find("vec_increment"), {b}, pack_i64({5}));
    run_until_quiet(d, clock);
    d.sync_from(b, 0, std::as_writable_bytes(std::span(v)));
    CHECK(v == std::vector<std::int32_t>{6, 4, 105});
  }
}

TEST_CASE("outputs are identical across device types") {
  auto lib = shipped_kernels();
  std::vector<std::vector<float>> results;
  for (auto type : {DeviceType::kCpu, DeviceType::kSimGpu, DeviceType::kSimFpga}) {
    VirtualClock clock;
    auto desc = device("x", 64ull << 20, 2, type);
    desc.speed_factor = type == DeviceType::kCpu ? 0.0 : 0.5;
    Device d(desc, clock);
    std::vector<float> in(32 * 32);
    std::mt19937 rng(4);
    for (auto& v : in) v = static_cast<float>(rng() % 1000) / 7.0f;
    auto ib = d.alloc(in.size() * 4);
    auto ob = d.alloc(in.size() * 4);
    d.sync_to(ib, 0, std::as_bytes(std::span(in)));
    d.launch(0, *lib.find("grid_relax"), {ob, ib}, pack_i64({32, 32, 10}));
    run_until_quiet(d, clock);
    std::vector<float> out(in.size());
    d.sync_from(ob, 0, std::as_writable_bytes(std::span(out)));
    results.push_back(out);
  }
  CHECK(std::memcmp(results[0].data(), results[1].data(), results[0].size() * 4) == 0);
  CHECK(std::memcmp(results[0].data(), results[2].data(), results[0].size() * 4) == 0);
}
