#include "arax/stubgen/sample_kernels.hpp"

#include <algorithm>
#include <cstring>

#include "arax/common/error.hpp"
#include "arax/stubgen/stub_support.hpp"

namespace arax::stubgen {

namespace {

using backends::KernelArgs;
using stubs::ScalarReader;

template <class T>
std::vector<T> load(std::span<const std::byte> b, std::size_t count) {
  if (count * sizeof(T) > b.size()) throw Error(Errc::kInvalidArgument, "argument buffer too small");
  std::vector<T> v(count);
  if (count) std::memcpy(v.data(), b.data(), count * sizeof(T));
  return v;
}

template <class T>
void store(std::span<std::byte> b, const std::vector<T>& v) {
  if (v.size() * sizeof(T) > b.size()) throw Error(Errc::kInvalidArgument, "argument buffer too small");
  if (!v.empty()) std::memcpy(b.data(), v.data(), v.size() * sizeof(T));
}

template <class T>
void store_one(std::span<std::byte> b, T value) {
  store(b, std::vector<T>{value});
}

void need(const KernelArgs& a, std::size_t n, const char* name) {
  if (a.buffers.size() < n) throw Error(Errc::kInvalidArgument, std::string(name) + ": expected " + std::to_string(n) + " buffers");
}

void add_kernel(backends::KernelLibrary& lib, const std::string& fn, backends::KernelFn body, double occupancy = 0.25) {
  lib.add({"sample." + fn, std::move(body), occupancy,
           [](std::span<const std::uint64_t> sizes, std::span<const std::byte>) {
             std::uint64_t total = 0;
             for (auto s : sizes) total += s;
             return 2000ull + total / 8;
           }});
}

}  // namespace

backends::KernelLibrary sample_kernels() {
  backends::KernelLibrary lib;

  add_kernel(lib, "add", [](const KernelArgs& a) {
    need(a, 1, "add");
    ScalarReader r(a.scalars);
    const int x = r.next<int>();
    const int y = r.next<int>();
    store_one(a.buffers[0], static_cast<int>(static_cast<unsigned>(x) + static_cast<unsigned>(y)));
  });

  add_kernel(lib, "copy", [](const KernelArgs& a) {
    need(a, 2, "copy");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    store(a.buffers[0], load<std::byte>(a.buffers[1], n));
  });

  add_kernel(lib, "vec_add_i32", [](const KernelArgs& a) {
    need(a, 3, "vec_add_i32");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    auto x = load<std::int32_t>(a.buffers[0], n);
    const auto y = load<std::int32_t>(a.buffers[1], n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = static_cast<std::int32_t>(static_cast<std::uint32_t>(x[i]) + static_cast<std::uint32_t>(y[i]));
    store(a.buffers[2], x);
  });

  add_kernel(lib, "saxpy", [](const KernelArgs& a) {
    need(a, 2, "saxpy");
    ScalarReader r(a.scalars);
    const auto n = r.next<std::size_t>();
    const auto alpha = r.next<float>();
    const auto x = load<float>(a.buffers[0], n);
    auto y = load<float>(a.buffers[1], n);
    for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + y[i];
    store(a.buffers[1], y);
  });

  add_kernel(lib, "sdot", [](const KernelArgs& a) {
    need(a, 3, "sdot");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    const auto x = load<float>(a.buffers[0], n);
    const auto y = load<float>(a.buffers[1], n);
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    store_one(a.buffers[2], acc);
  });

  add_kernel(lib, "sscal", [](const KernelArgs& a) {
    need(a, 1, "sscal");
    ScalarReader r(a.scalars);
    const auto alpha = r.next<float>();
    const auto n = r.next<std::size_t>();
    auto x = load<float>(a.buffers[0], n);
    for (auto& v : x) v *= alpha;
    store(a.buffers[0], x);
  });

  add_kernel(lib, "fill_u8", [](const KernelArgs& a) {
    need(a, 1, "fill_u8");
    ScalarReader r(a.scalars);
    const auto n = r.next<std::size_t>();
    const auto value = r.next<std::uint8_t>();
    store(a.buffers[0], std::vector<std::uint8_t>(n, value));
  });

  add_kernel(lib, "sum_i64", [](const KernelArgs& a) {
    need(a, 2, "sum_i64");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    std::uint64_t acc = 0;
    for (auto v : load<std::int64_t>(a.buffers[0], n)) acc += static_cast<std::uint64_t>(v);
    store_one(a.buffers[1], static_cast<std::int64_t>(acc));
  });

  add_kernel(lib, "dev_fill_f32", [](const KernelArgs& a) {
    need(a, 1, "dev_fill_f32");
    ScalarReader r(a.scalars);
    const auto n = r.next<std::size_t>();
    const auto value = r.next<float>();
    store(a.buffers[0], std::vector<float>(n, value));
  });

  add_kernel(lib, "dev_scale_f32", [](const KernelArgs& a) {
    need(a, 1, "dev_scale_f32");
    ScalarReader r(a.scalars);
    const auto n = r.next<std::size_t>();
    const auto factor = r.next<float>();
    auto x = load<float>(a.buffers[0], n);
    for (auto& v : x) v *= factor;
    store(a.buffers[0], x);
  });

  add_kernel(lib, "reverse_bytes", [](const KernelArgs& a) {
    need(a, 1, "reverse_bytes");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    auto b = load<std::uint8_t>(a.buffers[0], n);
    std::reverse(b.begin(), b.end());
    store(a.buffers[0], b);
  });

  add_kernel(lib, "mean_f64", [](const KernelArgs& a) {
    need(a, 2, "mean_f64");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    double acc = 0.0;
    for (auto v : load<double>(a.buffers[0], n)) acc += v;
    store_one(a.buffers[1], n == 0 ? 0.0 : acc / static_cast<double>(n));
  });

  add_kernel(
      lib, "matmul_f32",
      [](const KernelArgs& a) {
        need(a, 3, "matmul_f32");
        ScalarReader r(a.scalars);
        const auto m = static_cast<std::size_t>(std::max(0, r.next<int>()));
        const auto n = static_cast<std::size_t>(std::max(0, r.next<int>()));
        const auto k = static_cast<std::size_t>(std::max(0, r.next<int>()));
        const auto x = load<float>(a.buffers[0], m * k);
        const auto y = load<float>(a.buffers[1], k * n);
        std::vector<float> c(m * n, 0.0f);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) c[i * n + j] += x[i * k + p] * y[p * n + j];
        store(a.buffers[2], c);
      },
      1.0);

  add_kernel(lib, "checksum_u32", [](const KernelArgs& a) {
    need(a, 2, "checksum_u32");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    std::uint32_t s1 = 1, s2 = 0;
    for (auto b : load<std::uint8_t>(a.buffers[0], n)) {
      s1 = (s1 + b) % 65521;
      s2 = (s2 + s1) % 65521;
    }
    store_one(a.buffers[1], (s2 << 16) | s1);
  });

  add_kernel(lib, "dev_copy_f32", [](const KernelArgs& a) {
    need(a, 2, "dev_copy_f32");
    const auto n = ScalarReader(a.scalars).next<std::size_t>();
    store(a.buffers[0], load<float>(a.buffers[1], n));
  });

  return lib;
}

}  // namespace arax::stubgen
