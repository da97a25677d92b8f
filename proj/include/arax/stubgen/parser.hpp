#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "arax/stubgen/api_spec.hpp"

namespace arax::stubgen {

/// Header grammar: a sequence of declarations `ret name(type arg, ...);`
/// with `const` and single-level `*` qualifiers. Lines starting with `#` are
/// skipped; `//` and `/* */` comments are ignored, except that a `/** */`
/// comment right before a declaration is read for parameter hints:
///
///   @param NAME [in|out|inout] [host|device] size(EXPR)
///
/// Inference rules, in order, for every parameter:
///   - non-pointers are scalar inputs;
///   - direction: a hint wins, otherwise `const T*` is in and `T*` is inout;
///   - address space: a hint wins, otherwise the `h_` / `d_` name prefix;
///   - size of a pointer: a hint wins, otherwise a sibling scalar named
///     `P_size` (bytes) or `P_len` / `P_count` (elements), where P is the
///     pointer's name with or without its `h_` / `d_` prefix.
/// A pointer whose address space, or (host pointers only) size, cannot be
/// determined is Unresolved.
struct ParseResult {
  ApiSpec spec;
  std::vector<std::string> unresolved;  // names of incomplete functions
};

ParseResult parse_api(std::string_view header, std::string source_name = "");

/// Prints a function back as a hinted declaration that parse_api maps to the
/// same FunctionSpec.
std::string to_declaration(const FunctionSpec& fn);

/// Size expressions: integers, sibling scalar parameter names, sizeof(type),
/// + - * / and parentheses. Returns the normalized spelling; throws
/// kBadSizeExpression when the text is ill-formed or names anything that is
/// not a sibling scalar parameter of `fn`.
std::string normalize_size_expression(std::string_view expr, const FunctionSpec& fn);

/// Evaluates a normalized size expression given the scalar values by name.
std::uint64_t evaluate_size_expression(std::string_view expr, const std::vector<std::pair<std::string, std::int64_t>>& values);

}  // namespace arax::stubgen
