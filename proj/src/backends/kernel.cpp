#include "arax/backends/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "arax/common/error.hpp"

namespace arax::backends {

void KernelLibrary::add(KernelImpl impl) {
  if (impl.name.empty()) throw Error(Errc::kInvalidArgument, "kernel name must not be empty");
  if (!(impl.occupancy > 0.0 && impl.occupancy <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "kernel occupancy must be in (0, 1]: " + impl.name);
  }
  if (!impl.cost) impl.cost = [](std::span<const std::uint64_t>, std::span<const std::byte>) { return 1000ull; };
  const std::string name = impl.name;
  kernels_[name] = std::move(impl);
}

const KernelImpl* KernelLibrary::find(const std::string& name) const {
  auto it = kernels_.find(name);
  return it == kernels_.end() ? nullptr : &it->second;
}

KernelImpl* KernelLibrary::find_mutable(const std::string& name) {
  auto it = kernels_.find(name);
  return it == kernels_.end() ? nullptr : &it->second;
}

std::vector<std::string> KernelLibrary::names() const {
  std::vector<std::string> out;
  out.reserve(kernels_.size());
  for (const auto& [name, _] : kernels_) out.push_back(name);
  return out;
}

std::vector<std::byte> pack_i64(std::span<const std::int64_t> values) {
  std::vector<std::byte> out(values.size() * sizeof(std::int64_t));
  if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

std::vector<std::byte> pack_i64(std::initializer_list<std::int64_t> values) {
  return pack_i64(std::span<const std::int64_t>(values.begin(), values.size()));
}

std::int64_t scalar_i64(std::span<const std::byte> blob, std::size_t index, std::int64_t fallback) {
  if ((index + 1) * sizeof(std::int64_t) > blob.size()) return fallback;
  std::int64_t v = 0;
  std::memcpy(&v, blob.data() + index * sizeof(std::int64_t), sizeof(v));
  return v;
}

namespace kernels {

void vec_increment(std::span<std::byte> data, std::int32_t delta) {
  const std::size_t n = data.size() / sizeof(std::int32_t);
  for (std::size_t i = 0; i < n; ++i) {
    std::int32_t v = 0;
    std::memcpy(&v, data.data() + i * sizeof(v), sizeof(v));
    v = static_cast<std::int32_t>(static_cast<std::uint32_t>(v) + static_cast<std::uint32_t>(delta));
    std::memcpy(data.data() + i * sizeof(v), &v, sizeof(v));
  }
}

void gaussian_step(std::span<float> a, std::span<float> rhs, std::int64_t n, std::int64_t k) {
  if (n <= 0 || k < 0 || k >= n || static_cast<std::uint64_t>(n * n) > a.size()) {
    throw Error(Errc::kInvalidArgument, "gaussian_step: bad matrix dimensions");
  }
  const bool have_rhs = rhs.size() >= static_cast<std::size_t>(n);
  const float pivot = a[k * n + k];
  if (pivot == 0.0f) return;
  for (std::int64_t i = k + 1; i < n; ++i) {
    const float m = a[i * n + k] / pivot;
    for (std::int64_t j = k; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
    if (have_rhs) rhs[i] -= m * rhs[k];
  }
}

void grid_relax(std::span<const float> in, std::span<float> out, std::int64_t nx, std::int64_t ny,
                std::int64_t iterations) {
  const auto cells = static_cast<std::size_t>(nx * ny);
  if (nx <= 0 || ny <= 0 || in.size() < cells || out.size() < cells) {
    throw Error(Errc::kInvalidArgument, "grid_relax: bad grid dimensions");
  }
  std::vector<float> cur(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(cells));
  std::vector<float> next(cur);
  for (std::int64_t it = 0; it < iterations; ++it) {
    for (std::int64_t y = 1; y + 1 < ny; ++y) {
      for (std::int64_t x = 1; x + 1 < nx; ++x) {
        const std::int64_t c = y * nx + x;
        next[c] = 0.2f * (cur[c] + cur[c - 1] + cur[c + 1] + cur[c - nx] + cur[c + nx]);
      }
    }
    std::swap(cur, next);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

void path_dp(std::span<const std::int32_t> wall, std::span<std::int32_t> result, std::int64_t rows,
             std::int64_t cols) {
  if (rows <= 0 || cols <= 0 || wall.size() < static_cast<std::size_t>(rows * cols) ||
      result.size() < static_cast<std::size_t>(cols)) {
    throw Error(Errc::kInvalidArgument, "path_dp: bad dimensions");
  }
  std::vector<std::int32_t> prev(wall.begin(), wall.begin() + cols);
  std::vector<std::int32_t> cur(static_cast<std::size_t>(cols));
  for (std::int64_t r = 1; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      std::int32_t best = prev[c];
      if (c > 0) best = std::min(best, prev[c - 1]);
      if (c + 1 < cols) best = std::min(best, prev[c + 1]);
      cur[c] = wall[r * cols + c] + best;
    }
    std::swap(prev, cur);
  }
  std::copy(prev.begin(), prev.end(), result.begin());
}

}  // namespace kernels

namespace {

template <class T>
std::span<T> as(std::span<std::byte> b) {
  return {reinterpret_cast<T*>(b.data()), b.size() / sizeof(T)};
}

std::uint64_t arg_size(std::span<const std::uint64_t> sizes, std::size_t i) { return i < sizes.size() ? sizes[i] : 0; }

std::int64_t square_side(std::uint64_t bytes) {
  return static_cast<std::int64_t>(std::sqrt(static_cast<double>(bytes / sizeof(float))));
}

}  // namespace

KernelLibrary shipped_kernels() {
  KernelLibrary lib;

  lib.add({"noop", [](const KernelArgs&) {}, 0.25,
           [](std::span<const std::uint64_t>, std::span<const std::byte>) { return 2 * 1000ull; }});

  lib.add({"memcopy",
           [](const KernelArgs& a) {
             if (a.buffers.size() < 2) throw Error(Errc::kInvalidArgument, "memcopy: needs dst, src");
             const std::size_t n = std::min(a.buffers[0].size(), a.buffers[1].size());
             std::memcpy(a.buffers[0].data(), a.buffers[1].data(), n);
           },
           0.25,
           [](std::span<const std::uint64_t> s, std::span<const std::byte>) {
             return 5000ull + std::min(arg_size(s, 0), arg_size(s, 1)) / 10;
           }});

  lib.add({"vec_increment",
           [](const KernelArgs& a) {
             if (a.buffers.empty()) throw Error(Errc::kInvalidArgument, "vec_increment: needs a buffer");
             kernels::vec_increment(a.buffers[0], static_cast<std::int32_t>(scalar_i64(a.scalars, 0, 1)));
           },
           0.25,
           [](std::span<const std::uint64_t> s, std::span<const std::byte>) { return 5000ull + arg_size(s, 0) / 4; }});

  lib.add({"gaussian_step",
           [](const KernelArgs& a) {
             if (a.buffers.empty()) throw Error(Errc::kInvalidArgument, "gaussian_step: needs a matrix");
             const std::int64_t n = scalar_i64(a.scalars, 0, square_side(a.buffers[0].size()));
             const std::int64_t k = scalar_i64(a.scalars, 1, 0);
             std::span<float> rhs;
             if (a.buffers.size() > 1) rhs = as<float>(a.buffers[1]);
             kernels::gaussian_step(as<float>(a.buffers[0]), rhs, n, k);
           },
           1.0,
           [](std::span<const std::uint64_t> s, std::span<const std::byte> scalars) {
             const std::int64_t n = scalar_i64(scalars, 0, square_side(arg_size(s, 0)));
             const std::int64_t k = std::clamp<std::int64_t>(scalar_i64(scalars, 1, 0), 0, n);
             return 20000ull + static_cast<std::uint64_t>((n - k) * n) * 4;
           }});

  lib.add({"grid_relax",
           [](const KernelArgs& a) {
             if (a.buffers.size() < 2) throw Error(Errc::kInvalidArgument, "grid_relax: needs in, out");
             const std::int64_t side = square_side(a.buffers[0].size());
             const std::int64_t nx = scalar_i64(a.scalars, 0, side);
             const std::int64_t ny = scalar_i64(a.scalars, 1, side);
             const std::int64_t iters = scalar_i64(a.scalars, 2, 1);
             kernels::grid_relax(as<float>(a.buffers[1]), as<float>(a.buffers[0]), nx, ny, iters);
           },
           0.25,
           [](std::span<const std::uint64_t> s, std::span<const std::byte> scalars) {
             const std::int64_t side = square_side(arg_size(s, 1));
             const std::int64_t nx = scalar_i64(scalars, 0, side);
             const std::int64_t ny = scalar_i64(scalars, 1, side);
             const std::int64_t iters = scalar_i64(scalars, 2, 1);
             return 20000ull + static_cast<std::uint64_t>(nx * ny * iters);
           }});

  lib.add({"path_dp",
           [](const KernelArgs& a) {
             if (a.buffers.size() < 2) throw Error(Errc::kInvalidArgument, "path_dp: needs result, wall");
             auto wall = as<std::int32_t>(a.buffers[1]);
             auto result = as<std::int32_t>(a.buffers[0]);
             const std::int64_t cols = scalar_i64(a.scalars, 1, static_cast<std::int64_t>(result.size()));
             const std::int64_t rows = scalar_i64(a.scalars, 0, cols == 0 ? 0 : static_cast<std::int64_t>(wall.size()) / cols);
             kernels::path_dp(wall, result, rows, cols);
           },
           0.25,
           [](std::span<const std::uint64_t> s, std::span<const std::byte>) { return 10000ull + arg_size(s, 1) / 8; }});

  return lib;
}

}  // namespace arax::backends
