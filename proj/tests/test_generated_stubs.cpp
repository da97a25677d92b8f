#include <doctest.h>

#include <accel_client.hpp>
#include <accel_server.hpp>
#include <numeric>
#include <random>

#include "arax/stubgen/sample_kernels.hpp"
#include "stub_programs.hpp"

using namespace arax;
using namespace arax::client;

namespace {

using testing::accel_dispatch;

server::ServerConfig mixed_config() {
  auto cfg = testing::config(2);
  cfg.devices[1].type = backends::DeviceType::kSimGpu;
  return cfg;
}

// The hand-written equivalent of a stub: explicit buffers, transfers and issue.
template <class R>
R call_by_hand(TaskQueue& q, const char* kernel, std::vector<std::vector<std::byte>>& in_out,
               const std::vector<ArgDirection>& dirs, std::vector<std::byte> scalars) {
  std::vector<TaskBuffer> bufs;
  std::vector<TaskArgRef> args;
  for (std::size_t i = 0; i < in_out.size(); ++i) {
    bufs.push_back(a_allocate(*q.session, in_out[i].size()));
    if (dirs[i] != ArgDirection::kOut) REQUIRE(a_wait(a_sync_to(q, bufs.back(), in_out[i])) == TaskStatus::kSuccess);
    args.push_back({bufs.back(), dirs[i]});
  }
  auto ret = a_allocate(*q.session, sizeof(R));
  args.push_back({ret, ArgDirection::kOut});
  REQUIRE(a_wait(a_issue(q, {kernel, args, scalars})) == TaskStatus::kSuccess);
  for (std::size_t i = 0; i < in_out.size(); ++i) {
    if (dirs[i] != ArgDirection::kIn) REQUIRE(a_wait(a_sync_from(q, bufs[i], in_out[i])) == TaskStatus::kSuccess);
    a_free(bufs[i]);
  }
  std::vector<std::byte> raw(sizeof(R));
  REQUIRE(a_wait(a_sync_from(q, ret, raw)) == TaskStatus::kSuccess);
  a_free(ret);
  R r;
  std::memcpy(&r, raw.data(), sizeof(R));
  return r;
}

template <class T>
std::vector<std::byte> raw_bytes(const std::vector<T>& v) {
  std::vector<std::byte> out(v.size() * sizeof(T));
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

std::uint32_t adler32(std::string_view s) {
  std::uint32_t a = 1, b = 0;
  for (unsigned char c : s) {
    a = (a + c) % 65521;
    b = (b + a) % 65521;
  }
  return (b << 16) | a;
}

struct Fixture {
  server::Runtime rt{mixed_config(), {}, accel_dispatch()};
  std::unique_ptr<Session> s = rt.open_session();
  TaskQueue q = a_acquire(*s);
  ~Fixture() { a_release(q); }
};

}  // namespace

TEST_CASE("registration covers exactly the manifest") {
  std::size_t bound = 0;
  const auto table = accel_dispatch(&bound);
  CHECK(accel::accel_function_count == 200);
  CHECK(bound == 15);
  CHECK(table.knows("saxpy"));
  CHECK(table.types_for("saxpy").size() == 3);
  CHECK_FALSE(table.knows("acl_sgemv"));
  CHECK_FALSE(table.knows("sample.saxpy"));
}

TEST_CASE("add and copy through stubs") {
  Fixture f;
  CHECK(accel::add(f.q, 2, 3) == 5);
  CHECK(accel::add(f.q, -7, 7) == 0);

  std::mt19937 rng(11);
  std::vector<std::uint8_t> src(1000), dst(1000, 0);
  for (auto& b : src) b = static_cast<std::uint8_t>(rng());
  accel::copy(f.q, dst.data(), src.data(), src.size());
  CHECK(dst == src);
}

TEST_CASE("stubs agree with hand-written calls") {
  Fixture f;
  {
    std::vector<std::vector<std::byte>> none;
    std::vector<std::byte> scalars;
    stubs::pack(scalars, 40);
    stubs::pack(scalars, 2);
    CHECK(call_by_hand<int>(f.q, "add", none, {}, scalars) == accel::add(f.q, 40, 2));
  }
  {
    std::vector<float> x(257), y(257);
    std::iota(x.begin(), x.end(), 1.0f);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5f * static_cast<float>(i);
    std::vector<std::vector<std::byte>> bufs{raw_bytes(x), raw_bytes(y)};
    std::vector<std::byte> scalars;
    stubs::pack(scalars, x.size());
    const float by_hand = call_by_hand<float>(f.q, "sdot", bufs, {ArgDirection::kIn, ArgDirection::kIn}, scalars);
    const float stub = accel::sdot(f.q, x.size(), x.data(), y.data());
    CHECK(by_hand == stub);
    float oracle = 0.0f;
    for (std::size_t i = 0; i < x.size(); ++i) oracle += x[i] * y[i];
    CHECK(stub == oracle);
  }
  {
    const std::string text = "Wikipedia";
    std::vector<std::vector<std::byte>> bufs{raw_bytes(std::vector<char>(text.begin(), text.end()))};
    std::vector<std::byte> scalars;
    stubs::pack(scalars, text.size());
    const auto by_hand = call_by_hand<std::uint32_t>(f.q, "checksum_u32", bufs, {ArgDirection::kIn}, scalars);
    const auto stub = accel::checksum_u32(f.q, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    CHECK(stub == by_hand);
    CHECK(stub == 0x11E60398u);
    CHECK(stub == adler32(text));
  }
}

TEST_CASE("vector and matrix stubs match CPU references") {
  Fixture f;
  std::vector<std::int32_t> a{1, -2, 3, 2147483647}, b{10, 20, -30, 1}, out(4);
  accel::vec_add_i32(f.q, a.data(), b.data(), out.data(), a.size());
  CHECK(out == std::vector<std::int32_t>{11, 18, -27, -2147483647 - 1});

  std::vector<float> x{1, 2, 3}, y{10, 20, 30};
  accel::saxpy(f.q, x.size(), 2.0f, x.data(), y.data());
  CHECK(y == std::vector<float>{12, 24, 36});
  accel::sscal(f.q, 0.5f, y.data(), y.size());
  CHECK(y == std::vector<float>{6, 12, 18});

  std::vector<std::uint8_t> bytes(17, 0);
  accel::fill_u8(f.q, bytes.data(), bytes.size(), 0xAB);
  CHECK(bytes == std::vector<std::uint8_t>(17, 0xAB));
  std::vector<std::uint8_t> word{'s', 't', 'u', 'b'};
  accel::reverse_bytes(f.q, word.data(), word.size());
  CHECK(word == std::vector<std::uint8_t>{'b', 'u', 't', 's'});

  std::vector<std::int64_t> vals{5, -3, 1ll << 40};
  CHECK(accel::sum_i64(f.q, vals.data(), vals.size()) == 2 + (1ll << 40));
  std::vector<double> d{1.5, 2.5, 5.0};
  CHECK(accel::mean_f64(f.q, d.data(), d.size()) == 3.0);

  // 2x3 times 3x2
  std::vector<float> ma{1, 2, 3, 4, 5, 6}, mb{7, 8, 9, 10, 11, 12}, mc(4, -1.0f);
  accel::matmul_f32(f.q, ma.data(), mb.data(), mc.data(), 2, 2, 3);
  CHECK(mc == std::vector<float>{58, 64, 139, 154});
}

TEST_CASE("device-pointer stubs take task buffers") {
  Fixture f;
  const std::size_t n = 64;
  auto src = a_allocate(*f.s, n * sizeof(float));
  auto dst = a_allocate(*f.s, n * sizeof(float));
  accel::dev_fill_f32(f.q, src, n, 1.5f);
  accel::dev_scale_f32(f.q, src, n, 4.0f);
  accel::dev_copy_f32(f.q, dst, src, n);
  std::vector<float> host(n);
  REQUIRE(a_wait(a_sync_from(f.q, dst, std::as_writable_bytes(std::span(host)))) == TaskStatus::kSuccess);
  CHECK(host == std::vector<float>(n, 6.0f));
  a_free(src);
  a_free(dst);
}

TEST_CASE("every kernel-backed stub matches a hand-written client") {
  Fixture f;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto results = testing::compare_stubs(f.q, seed);
    CHECK(results.size() == 15);
    for (const auto& r : results) CHECK_MESSAGE(r.equal, r.function << " seed " << seed);
  }
}

TEST_CASE("a stub without an implementation fails cleanly") {
  Fixture f;
  std::vector<float> in{1, 2}, out(2);
  CHECK_THROWS_AS(accel::acl_negate_f32(f.q, in.data(), in.size(), out.data(), out.size()), Error);
  // The queue is still usable afterwards.
  CHECK(accel::add(f.q, 1, 1) == 2);
}
