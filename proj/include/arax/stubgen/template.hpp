#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace arax::stubgen {

struct TemplateContext;

/// A value in the template data: text, a flag, or a list of nested contexts.
struct TemplateValue {
  std::variant<std::string, bool, std::vector<TemplateContext>> v;
  TemplateValue() : v(std::string{}) {}
  TemplateValue(std::string s) : v(std::move(s)) {}
  TemplateValue(const char* s) : v(std::string(s)) {}
  TemplateValue(bool b) : v(b) {}
  TemplateValue(std::vector<TemplateContext> l);
};

struct TemplateContext {
  std::map<std::string, TemplateValue> values;
  TemplateValue& operator[](const std::string& key) { return values[key]; }
};

inline TemplateValue::TemplateValue(std::vector<TemplateContext> l) : v(std::move(l)) {}

/// Logic-less templates in the mustache style:
///   {{name}}               text substitution (looked up through enclosing sections)
///   {{#name}}..{{/name}}   repeat per list item, or once when the flag/text is set
///   {{^name}}..{{/name}}   render when the list is empty or the flag/text unset
///   {{! comment}}
/// A line holding only a section, inverted, closing or comment tag is
/// dropped entirely from the output.
class Template {
 public:
  explicit Template(std::string_view text, std::string name = "template");
  std::string render(const TemplateContext& ctx) const;

 private:
  struct Node {
    enum Kind { kText, kVar, kSection, kInverted } kind = kText;
    std::string text;  // literal text or key
    std::vector<Node> children;
  };
  void render_nodes(const std::vector<Node>& nodes, std::vector<const TemplateContext*>& stack, std::string& out) const;
  const TemplateValue* lookup(const std::string& key, const std::vector<const TemplateContext*>& stack) const;

  std::string name_;
  std::vector<Node> root_;
};

}  // namespace arax::stubgen
