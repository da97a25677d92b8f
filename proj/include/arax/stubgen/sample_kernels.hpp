#pragma once

#include "arax/backends/kernel.hpp"

namespace arax::stubgen {

/// Implementations for the kernel-backed functions of the sample accelerator
/// API (tools/stubgen/sample). Registered as "sample.<function>".
backends::KernelLibrary sample_kernels();

}  // namespace arax::stubgen
