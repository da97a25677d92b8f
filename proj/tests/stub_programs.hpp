#pragma once

// Every kernel-backed function of the sample API, called once through its
// generated stub and once by a hand-written client program that uses the
// a_* API directly, on the same random inputs.

#include <accel_client.hpp>
#include <accel_server.hpp>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "arax/stubgen/sample_kernels.hpp"
#include "support.hpp"

namespace arax::testing {

inline server::DispatchTable accel_dispatch(std::size_t* bound = nullptr) {
  static constexpr backends::DeviceType types[] = {backends::DeviceType::kCpu, backends::DeviceType::kSimGpu,
                                                   backends::DeviceType::kSimFpga};
  auto table = server::default_dispatch();
  const auto n = accel::register_accel(table, stubgen::sample_kernels(), types);
  if (bound) *bound = n;
  return table;
}

/// One argument of a hand-written call: host memory (staged through a task
/// buffer) or a task buffer the caller already owns.
struct HandArg {
  void* host = nullptr;
  std::uint64_t bytes = 0;
  client::ArgDirection dir = client::ArgDirection::kIn;
  client::TaskBuffer device{};
};

inline void hand_call(client::TaskQueue& q, const char* kernel, std::vector<HandArg> args,
                      const std::vector<std::byte>& scalars, void* ret = nullptr, std::uint64_t ret_bytes = 0) {
  using namespace client;
  std::vector<TaskBuffer> owned(args.size());
  std::vector<TaskArgRef> refs;
  for (std::size_t i = 0; i < args.size(); ++i) {
    auto& a = args[i];
    if (a.host) {
      owned[i] = a_allocate(*q.session, a.bytes);
      if (a.dir != ArgDirection::kOut) {
        if (a_wait(a_sync_to(q, owned[i], std::span(static_cast<const std::byte*>(a.host), a.bytes))) != TaskStatus::kSuccess) {
          throw Error(Errc::kTaskFailed, "upload");
        }
      }
      refs.push_back({owned[i], a.dir});
    } else {
      refs.push_back({a.device, a.dir});
    }
  }
  TaskBuffer rb{};
  if (ret) {
    rb = a_allocate(*q.session, ret_bytes);
    refs.push_back({rb, ArgDirection::kOut});
  }
  if (a_wait(a_issue(q, {kernel, refs, scalars})) != TaskStatus::kSuccess) throw Error(Errc::kTaskFailed, kernel);
  for (std::size_t i = 0; i < args.size(); ++i) {
    auto& a = args[i];
    if (!a.host) continue;
    if (a.dir != ArgDirection::kIn) {
      a_wait(a_sync_from(q, owned[i], std::span(static_cast<std::byte*>(a.host), a.bytes)));
    }
    a_free(owned[i]);
  }
  if (ret) {
    a_wait(a_sync_from(q, rb, std::span(static_cast<std::byte*>(ret), ret_bytes)));
    a_free(rb);
  }
}

template <class... T>
std::vector<std::byte> scalars_of(const T&... v) {
  std::vector<std::byte> blob;
  (stubs::pack(blob, v), ...);
  return blob;
}

template <class T>
bool same_bytes(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

template <class T>
bool same_bytes(const T& a, const T& b) {
  return std::memcmp(&a, &b, sizeof(T)) == 0;
}

struct StubComparison {
  std::string function;
  bool equal = false;
};

inline std::vector<StubComparison> compare_stubs(client::TaskQueue& q, std::uint64_t seed) {
  using client::ArgDirection;
  std::mt19937_64 rng(seed);
  auto floats = [&](std::size_t n) {
    std::vector<float> v(n);
    std::uniform_real_distribution<float> d(-4.0f, 4.0f);
    for (auto& x : v) x = d(rng);
    return v;
  };
  auto bytes = [&](std::size_t n) {
    std::vector<std::uint8_t> v(n);
    for (auto& x : v) x = static_cast<std::uint8_t>(rng());
    return v;
  };
  const std::size_t n = 1 + rng() % 300;
  std::vector<StubComparison> out;
  auto record = [&](const char* fn, bool eq) { out.push_back({fn, eq}); };

  {
    const int a = static_cast<int>(rng()), b = static_cast<int>(rng());
    int hand = 0;
    hand_call(q, "add", {}, scalars_of(a, b), &hand, sizeof hand);
    record("add", accel::add(q, a, b) == hand);
  }
  {
    const auto src = bytes(n);
    std::vector<std::uint8_t> s1(n), s2(n);
    accel::copy(q, s1.data(), src.data(), n);
    hand_call(q, "copy", {{s2.data(), n, ArgDirection::kOut}, {const_cast<std::uint8_t*>(src.data()), n, ArgDirection::kIn}},
              scalars_of(n));
    record("copy", s1 == s2 && s1 == src);
  }
  {
    std::vector<std::int32_t> a(n), b(n), o1(n), o2(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<std::int32_t>(rng()), b[i] = static_cast<std::int32_t>(rng());
    accel::vec_add_i32(q, a.data(), b.data(), o1.data(), n);
    hand_call(q, "vec_add_i32",
              {{a.data(), n * 4, ArgDirection::kIn}, {b.data(), n * 4, ArgDirection::kIn}, {o2.data(), n * 4, ArgDirection::kOut}},
              scalars_of(n));
    record("vec_add_i32", o1 == o2);
  }
  {
    auto x = floats(n);
    auto y1 = floats(n);
    auto y2 = y1;
    const float alpha = floats(1)[0];
    accel::saxpy(q, n, alpha, x.data(), y1.data());
    hand_call(q, "saxpy", {{x.data(), n * 4, ArgDirection::kIn}, {y2.data(), n * 4, ArgDirection::kInOut}},
              scalars_of(n, alpha));
    record("saxpy", same_bytes(y1, y2));
  }
  {
    auto x = floats(n), y = floats(n);
    float hand = 0;
    hand_call(q, "sdot", {{x.data(), n * 4, ArgDirection::kIn}, {y.data(), n * 4, ArgDirection::kIn}}, scalars_of(n), &hand,
              sizeof hand);
    record("sdot", same_bytes(accel::sdot(q, n, x.data(), y.data()), hand));
  }
  {
    auto x1 = floats(n);
    auto x2 = x1;
    const float alpha = floats(1)[0];
    accel::sscal(q, alpha, x1.data(), n);
    hand_call(q, "sscal", {{x2.data(), n * 4, ArgDirection::kInOut}}, scalars_of(alpha, n));
    record("sscal", same_bytes(x1, x2));
  }
  {
    const auto value = static_cast<std::uint8_t>(rng());
    std::vector<std::uint8_t> b1(n), b2(n);
    accel::fill_u8(q, b1.data(), n, value);
    hand_call(q, "fill_u8", {{b2.data(), n, ArgDirection::kOut}}, scalars_of(n, value));
    record("fill_u8", b1 == b2);
  }
  {
    std::vector<std::int64_t> v(n);
    for (auto& x : v) x = static_cast<std::int64_t>(rng());
    std::int64_t hand = 0;
    hand_call(q, "sum_i64", {{v.data(), n * 8, ArgDirection::kIn}}, scalars_of(n), &hand, sizeof hand);
    record("sum_i64", accel::sum_i64(q, v.data(), n) == hand);
  }
  {
    auto* s = q.session;
    const float value = floats(1)[0], factor = floats(1)[0];
    auto d1 = client::a_allocate(*s, n * 4), d2 = client::a_allocate(*s, n * 4);
    auto e1 = client::a_allocate(*s, n * 4), e2 = client::a_allocate(*s, n * 4);
    accel::dev_fill_f32(q, d1, n, value);
    accel::dev_scale_f32(q, d1, n, factor);
    accel::dev_copy_f32(q, e1, d1, n);
    hand_call(q, "dev_fill_f32", {{nullptr, 0, ArgDirection::kInOut, d2}}, scalars_of(n, value));
    hand_call(q, "dev_scale_f32", {{nullptr, 0, ArgDirection::kInOut, d2}}, scalars_of(n, factor));
    hand_call(q, "dev_copy_f32", {{nullptr, 0, ArgDirection::kOut, e2}, {nullptr, 0, ArgDirection::kIn, d2}},
              scalars_of(n));
    std::vector<float> r1(n), r2(n);
    client::a_wait(client::a_sync_from(q, e1, std::as_writable_bytes(std::span(r1))));
    client::a_wait(client::a_sync_from(q, e2, std::as_writable_bytes(std::span(r2))));
    const bool eq = same_bytes(r1, r2) && r1[0] == value * factor;
    record("dev_fill_f32", eq);
    record("dev_scale_f32", eq);
    record("dev_copy_f32", eq);
    for (auto b : {d1, d2, e1, e2}) client::a_free(b);
  }
  {
    auto b1 = bytes(n);
    auto b2 = b1;
    accel::reverse_bytes(q, b1.data(), n);
    hand_call(q, "reverse_bytes", {{b2.data(), n, ArgDirection::kInOut}}, scalars_of(n));
    record("reverse_bytes", b1 == b2);
  }
  {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng() % 100000) / 7.0;
    double hand = 0;
    hand_call(q, "mean_f64", {{v.data(), n * 8, ArgDirection::kIn}}, scalars_of(n), &hand, sizeof hand);
    record("mean_f64", same_bytes(accel::mean_f64(q, v.data(), n), hand));
  }
  {
    const int m = 1 + static_cast<int>(rng() % 12), k = 1 + static_cast<int>(rng() % 12), c = 1 + static_cast<int>(rng() % 12);
    auto a = floats(static_cast<std::size_t>(m * k)), b = floats(static_cast<std::size_t>(k * c));
    std::vector<float> c1(static_cast<std::size_t>(m * c)), c2(c1.size());
    accel::matmul_f32(q, a.data(), b.data(), c1.data(), m, c, k);
    hand_call(q, "matmul_f32",
              {{a.data(), a.size() * 4, ArgDirection::kIn}, {b.data(), b.size() * 4, ArgDirection::kIn},
               {c2.data(), c2.size() * 4, ArgDirection::kOut}},
              scalars_of(m, c, k));
    record("matmul_f32", same_bytes(c1, c2));
  }
  {
    auto data = bytes(n);
    std::uint32_t hand = 0;
    hand_call(q, "checksum_u32", {{data.data(), n, ArgDirection::kIn}}, scalars_of(n), &hand, sizeof hand);
    record("checksum_u32", accel::checksum_u32(q, data.data(), n) == hand);
  }
  return out;
}

}  // namespace arax::testing
