#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arax/stubgen/api_spec.hpp"

namespace arax::stubgen {

/// Annotation file format, one block per function:
///
///   # comment
///   [copy]
///   dst: size = n; space = host; dir = out
///   src: size = n; space = host
///
/// Keys per parameter line are `size`, `space` and `dir`, separated by ';'.
struct ParamAnnotation {
  std::string param;
  std::optional<std::string> size;
  std::optional<Space> space;
  std::optional<Direction> direction;
  int line = 0;
};

struct FunctionAnnotation {
  std::string function;
  std::vector<ParamAnnotation> params;
  int line = 0;
};

struct AnnotationFile {
  std::vector<FunctionAnnotation> functions;
};

AnnotationFile parse_annotations(std::string_view text);

enum class MergeMode {
  kRequireComplete,  // throw kIncompleteSpec listing what is still unresolved
  kAllowPartial,
};

/// Applies the annotations. Throws kUnknownFunction for an absent function
/// or parameter, kBadSizeExpression for an ill-formed size, and
/// kInvalidArgument for a block that resolves nothing. Resolved fields are
/// never made unresolved.
ApiSpec merge_annotations(ApiSpec spec, const AnnotationFile& ann, MergeMode mode = MergeMode::kRequireComplete);

}  // namespace arax::stubgen
