#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arax {

enum class Errc {
  kSizeTooSmall,
  kNameCollision,
  kMappingFailed,
  kBadMagic,
  kVersionMismatch,
  kOutOfMemory,
  kDoubleFree,
  kForeignOffset,
  kInvalidArgument,
  kDirectoryFull,
  kQueueBusy,
  kBufferBusy,
  kDeadHandle,
  kOversizeTransfer,
  kInvalidHandle,
  kDuplicateKernel,
  kUnknownKernel,
  kDeviceOOM,
  kKernelUnsupported,
  kOutOfBounds,
  kCrossDevice,
  kNoDevices,
  kNoSupportingDevice,
  kSyntaxError,
  kUnknownFunction,
  kBadSizeExpression,
  kIncompleteSpec,
  kUnknownScenario,
  kConfig,
  kIo,
  kSimulationStalled,
  kTaskFailed,
};

std::string_view errc_name(Errc code) noexcept;

/// Exception type used across the runtime. The message is the human-readable
/// reason ("size too small", "double free", ...); code() is stable for tests.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace arax
