#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace arax::stubgen {

enum class Direction { kIn, kOut, kInOut };
enum class Space { kHost, kDevice, kScalar };

std::string_view to_string(Direction d);
std::string_view to_string(Space s);
Direction parse_direction(std::string_view text);
Space parse_space(std::string_view text);

struct ParamSpec {
  std::string name;
  std::string base_type;  // canonical spelling, e.g. "float", "uint32_t", "unsigned long"
  bool pointer = false;
  bool is_const = false;
  Direction direction = Direction::kIn;
  /// nullopt: the address space of a pointer could not be inferred.
  std::optional<Space> space;
  /// Bytes the pointer spans, as an expression over sibling scalar params.
  /// Required for host pointers; device pointers carry their own size.
  std::optional<std::string> size;

  bool resolved() const;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct FunctionSpec {
  std::string name;
  std::string return_type;
  std::vector<ParamSpec> params;
  int line = 0;

  bool complete() const;
  std::vector<std::string> unresolved_params() const;
  const ParamSpec* find(std::string_view param) const;
  ParamSpec* find(std::string_view param);
  bool operator==(const FunctionSpec& o) const {
    return name == o.name && return_type == o.return_type && params == o.params;
  }
};

struct ApiSpec {
  std::string source;  // header file name, informational
  std::vector<FunctionSpec> functions;

  const FunctionSpec* find(std::string_view name) const;
  FunctionSpec* find(std::string_view name);
  std::size_t complete_count() const;
  std::vector<std::string> incomplete_functions() const;
};

/// Stable JSON schema:
///   {"source": str, "functions": [{"name", "return_type", "line", "complete",
///     "params": [{"name", "type", "pointer", "const", "direction",
///                 "space": "host"|"device"|"scalar"|null, "size": str|null}]}]}
std::string to_json(const ApiSpec& spec);
ApiSpec spec_from_json(const std::string& text);

/// Byte width of a canonical base type ("void" counts as 1).
std::uint64_t type_size(std::string_view canonical);

}  // namespace arax::stubgen
