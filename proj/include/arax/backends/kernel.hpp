#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace arax::backends {

/// What a kernel sees at execution: one byte span per task argument (in task
/// order) plus the opaque scalar blob.
struct KernelArgs {
  std::span<const std::span<std::byte>> buffers;
  std::span<const std::byte> scalars;
};

using KernelFn = std::function<void(const KernelArgs&)>;

/// Modeled base CPU time in nanoseconds for a launch with the given argument
/// sizes. Drives the virtual clock; the real clock measures instead.
using CostModel = std::function<std::uint64_t(std::span<const std::uint64_t> arg_sizes,
                                              std::span<const std::byte> scalars)>;

struct KernelImpl {
  std::string name;
  KernelFn fn;
  /// Fraction of the device one launch consumes, in (0, 1].
  double occupancy = 0.25;
  CostModel cost;
};

/// Named plug-in implementations. Every device type runs the same CPU
/// function, which is what keeps outputs bit-identical across devices.
class KernelLibrary {
 public:
  void add(KernelImpl impl);
  const KernelImpl* find(const std::string& name) const;
  KernelImpl* find_mutable(const std::string& name);
  std::vector<std::string> names() const;

 private:
  std::map<std::string, KernelImpl> kernels_;
};

/// noop, memcopy, vec_increment, gaussian_step, grid_relax, path_dp.
KernelLibrary shipped_kernels();

/// Scalar blobs used by the shipped kernels are packed little-endian int64s.
std::vector<std::byte> pack_i64(std::initializer_list<std::int64_t> values);
std::vector<std::byte> pack_i64(std::span<const std::int64_t> values);
std::int64_t scalar_i64(std::span<const std::byte> blob, std::size_t index, std::int64_t fallback);

namespace kernels {
// Reference CPU implementations, callable directly by tests and oracles.
void vec_increment(std::span<std::byte> data, std::int32_t delta);
void gaussian_step(std::span<float> matrix, std::span<float> rhs, std::int64_t n, std::int64_t pivot);
void grid_relax(std::span<const float> in, std::span<float> out, std::int64_t nx, std::int64_t ny,
                std::int64_t iterations);
void path_dp(std::span<const std::int32_t> wall, std::span<std::int32_t> result, std::int64_t rows, std::int64_t cols);
}  // namespace kernels

}  // namespace arax::backends
