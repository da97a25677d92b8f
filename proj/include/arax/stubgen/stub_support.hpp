#pragma once

// Runtime helpers used by generated client stubs and server registrations.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "arax/backends/kernel.hpp"
#include "arax/client/api.hpp"
#include "arax/server/dispatch.hpp"

namespace arax::stubs {

/// Scalars are packed back to back in declaration order, each with its
/// native width, little-endian.
template <class T>
void pack(std::vector<std::byte>& blob, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  blob.insert(blob.end(), p, p + sizeof(T));
}

/// Kernel-side reader for the same layout.
class ScalarReader {
 public:
  explicit ScalarReader(std::span<const std::byte> blob) : blob_(blob) {}
  template <class T>
  T next() {
    T v{};
    if (pos_ + sizeof(T) > blob_.size()) throw Error(Errc::kInvalidArgument, "scalar blob too short");
    std::memcpy(&v, blob_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

 private:
  std::span<const std::byte> blob_;
  std::size_t pos_ = 0;
};

/// A task buffer that lives for the duration of one stub call.
class Scratch {
 public:
  Scratch(client::TaskQueue& q, std::uint64_t bytes)
      : q_(q), bytes_(bytes), buf_(client::a_allocate(*q.session, bytes == 0 ? 1 : bytes)) {}
  ~Scratch() {
    try {
      client::a_free(buf_);
    } catch (...) {
    }
  }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;

  const client::TaskBuffer& buffer() const { return buf_; }
  void upload(const void* src) {
    if (bytes_ == 0) return;
    const auto st = client::a_wait(client::a_sync_to(q_, buf_, std::span(static_cast<const std::byte*>(src), bytes_)));
    if (st != client::TaskStatus::kSuccess) {
      throw Error(Errc::kTaskFailed, "upload failed: " + std::string(client::to_string(st)));
    }
  }
  void download(void* dst) {
    if (bytes_ == 0) return;
    const auto st = client::a_wait(client::a_sync_from(q_, buf_, std::span(static_cast<std::byte*>(dst), bytes_)));
    if (st != client::TaskStatus::kSuccess) {
      throw Error(Errc::kTaskFailed, "download failed: " + std::string(client::to_string(st)));
    }
  }

 private:
  client::TaskQueue& q_;
  std::uint64_t bytes_;
  client::TaskBuffer buf_;
};

inline void run(client::TaskQueue& q, const char* kernel, const std::vector<client::TaskArgRef>& args,
                const std::vector<std::byte>& scalars) {
  const auto st = client::a_wait(client::a_issue(q, {kernel, args, scalars}));
  if (st != client::TaskStatus::kSuccess) {
    throw Error(Errc::kTaskFailed, std::string(kernel) + ": " + std::string(client::to_string(st)));
  }
}

/// Registers `function` under the implementation named `slot` for each
/// device type. Returns false when the library has no such implementation.
inline bool bind(server::DispatchTable& table, const backends::KernelLibrary& impls,
                 std::span<const backends::DeviceType> types, const char* function, const char* slot) {
  const auto* impl = impls.find(slot);
  if (!impl) return false;
  backends::KernelImpl renamed = *impl;
  renamed.name = function;
  for (auto t : types) table.register_kernel(function, t, renamed);
  return true;
}

}  // namespace arax::stubs
