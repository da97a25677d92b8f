#include "arax/stubgen/annotations.hpp"

#include <sstream>

#include "arax/common/error.hpp"
#include "arax/stubgen/parser.hpp"

namespace arax::stubgen {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void syntax(int line, const std::string& what) {
  throw Error(Errc::kSyntaxError, "annotations line " + std::to_string(line) + ": " + what);
}

// Unresolved fields: a pointer's missing address space, and a missing size
// unless the pointer is known to live on the device.
std::size_t unresolved_fields(const FunctionSpec& fn) {
  std::size_t n = 0;
  for (const auto& p : fn.params) {
    if (!p.pointer) continue;
    if (!p.space) ++n;
    if (!p.size && p.space != Space::kDevice) ++n;
  }
  return n;
}

}  // namespace

AnnotationFile parse_annotations(std::string_view text) {
  AnnotationFile out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string l = trim(raw);
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') syntax(line, "unterminated function header");
      const std::string name = trim(std::string_view(l).substr(1, l.size() - 2));
      if (name.empty()) syntax(line, "empty function name");
      out.functions.push_back({name, {}, line});
      continue;
    }
    if (out.functions.empty()) syntax(line, "parameter line before any [function] header");
    const auto colon = l.find(':');
    if (colon == std::string::npos) syntax(line, "expected 'param: key = value; ...'");
    ParamAnnotation pa;
    pa.param = trim(std::string_view(l).substr(0, colon));
    pa.line = line;
    if (pa.param.empty()) syntax(line, "empty parameter name");
    std::istringstream items(l.substr(colon + 1));
    std::string item;
    while (std::getline(items, item, ';')) {
      item = trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) syntax(line, "expected key = value in '" + item + "'");
      const std::string key = trim(std::string_view(item).substr(0, eq));
      const std::string value = trim(std::string_view(item).substr(eq + 1));
      if (value.empty()) syntax(line, "empty value for " + key);
      try {
        if (key == "size") pa.size = value;
        else if (key == "space") pa.space = parse_space(value);
        else if (key == "dir" || key == "direction") pa.direction = parse_direction(value);
        else syntax(line, "unknown key '" + key + "'");
      } catch (const Error& e) {
        if (e.code() == Errc::kSyntaxError) throw;
        syntax(line, e.what());
      }
    }
    out.functions.back().params.push_back(std::move(pa));
  }
  return out;
}

ApiSpec merge_annotations(ApiSpec spec, const AnnotationFile& ann, MergeMode mode) {
  for (const auto& fa : ann.functions) {
    FunctionSpec* fn = spec.find(fa.function);
    if (!fn) {
      throw Error(Errc::kUnknownFunction, "annotations line " + std::to_string(fa.line) + ": unknown function " + fa.function);
    }
    const auto before = unresolved_fields(*fn);
    for (const auto& pa : fa.params) {
      ParamSpec* p = fn->find(pa.param);
      if (!p) {
        throw Error(Errc::kUnknownFunction,
                    "annotations line " + std::to_string(pa.line) + ": " + fa.function + " has no parameter " + pa.param);
      }
      const bool was_resolved = p->resolved();
      if (!p->pointer && (pa.size || (pa.space && *pa.space != Space::kScalar))) {
        throw Error(Errc::kInvalidArgument, "annotations line " + std::to_string(pa.line) + ": " + pa.param +
                                                " is a scalar and takes no size or address space");
      }
      if (pa.space) {
        if (p->pointer && *pa.space == Space::kScalar) {
          throw Error(Errc::kInvalidArgument,
                      "annotations line " + std::to_string(pa.line) + ": pointer " + pa.param + " cannot be scalar");
        }
        p->space = pa.space;
      }
      if (pa.size) p->size = normalize_size_expression(*pa.size, *fn);
      if (pa.direction) {
        if (!p->pointer && *pa.direction != Direction::kIn) {
          throw Error(Errc::kInvalidArgument,
                      "annotations line " + std::to_string(pa.line) + ": scalar " + pa.param + " can only be in");
        }
        if (p->is_const && *pa.direction != Direction::kIn) {
          throw Error(Errc::kInvalidArgument,
                      "annotations line " + std::to_string(pa.line) + ": const pointer " + pa.param + " can only be in");
        }
        p->direction = *pa.direction;
      }
      if (was_resolved && !p->resolved()) {
        throw Error(Errc::kInvalidArgument, "annotations line " + std::to_string(pa.line) + ": would leave " +
                                                fa.function + "." + pa.param + " unresolved");
      }
    }
    if (before == 0 || unresolved_fields(*fn) >= before) {
      throw Error(Errc::kInvalidArgument, "annotations line " + std::to_string(fa.line) + ": block for " + fa.function +
                                              " resolves nothing");
    }
  }
  if (mode == MergeMode::kRequireComplete) {
    std::string missing;
    for (const auto& f : spec.functions) {
      for (const auto& p : f.unresolved_params()) missing += (missing.empty() ? "" : ", ") + f.name + "." + p;
    }
    if (!missing.empty()) throw Error(Errc::kIncompleteSpec, "still unresolved: " + missing);
  }
  return spec;
}

}  // namespace arax::stubgen
