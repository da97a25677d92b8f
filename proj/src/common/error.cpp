#include "arax/common/error.hpp"

namespace arax {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kSizeTooSmall: return "size too small";
    case Errc::kNameCollision: return "name collision";
    case Errc::kMappingFailed: return "mapping failure";
    case Errc::kBadMagic: return "bad magic";
    case Errc::kVersionMismatch: return "version mismatch";
    case Errc::kOutOfMemory: return "out of arena memory";
    case Errc::kDoubleFree: return "double free";
    case Errc::kForeignOffset: return "foreign offset";
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kDirectoryFull: return "directory full";
    case Errc::kQueueBusy: return "queue busy";
    case Errc::kBufferBusy: return "buffer busy";
    case Errc::kDeadHandle: return "dead handle";
    case Errc::kOversizeTransfer: return "oversize transfer";
    case Errc::kInvalidHandle: return "invalid handle";
    case Errc::kDuplicateKernel: return "duplicate registration";
    case Errc::kUnknownKernel: return "unknown kernel";
    case Errc::kDeviceOOM: return "device out of memory";
    case Errc::kKernelUnsupported: return "kernel unsupported";
    case Errc::kOutOfBounds: return "out of bounds";
    case Errc::kCrossDevice: return "cross-device copy";
    case Errc::kNoDevices: return "no devices";
    case Errc::kNoSupportingDevice: return "no device supports the kernel";
    case Errc::kSyntaxError: return "syntax error";
    case Errc::kUnknownFunction: return "unknown function";
    case Errc::kBadSizeExpression: return "ill-formed size expression";
    case Errc::kIncompleteSpec: return "spec not complete";
    case Errc::kUnknownScenario: return "unknown scenario";
    case Errc::kConfig: return "configuration error";
    case Errc::kIo: return "i/o error";
    case Errc::kSimulationStalled: return "simulation stalled";
    case Errc::kTaskFailed: return "task failed";
  }
  return "unknown error";
}

}  // namespace arax
