#include "arax/stubgen/template.hpp"

#include "arax/common/error.hpp"

namespace arax::stubgen {

namespace {

struct RawTag {
  char sigil;  // 0 for a variable
  std::string key;
  std::size_t begin;  // first byte of the (possibly widened) tag span
  std::size_t end;    // one past the span
};

bool blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

}  // namespace

Template::Template(std::string_view text, std::string name) : name_(std::move(name)) {
  // Tokenize, widening standalone block tags to their whole line.
  std::vector<RawTag> tags;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const auto close = text.find("}}", pos + 2);
    if (close == std::string_view::npos) throw Error(Errc::kSyntaxError, name_ + ": unterminated '{{'");
    std::string body(text.substr(pos + 2, close - pos - 2));
    char sigil = 0;
    if (!body.empty() && (body[0] == '#' || body[0] == '^' || body[0] == '/' || body[0] == '!')) {
      sigil = body[0];
      body.erase(0, 1);
    }
    const auto b = body.find_first_not_of(" \t");
    const auto e = body.find_last_not_of(" \t");
    std::string key = b == std::string::npos ? "" : body.substr(b, e - b + 1);
    RawTag tag{sigil, key, pos, close + 2};
    if (sigil != 0) {
      const auto line_start = text.rfind('\n', pos == 0 ? 0 : pos - 1);
      const std::size_t ls = (line_start == std::string_view::npos || pos == 0) ? 0 : line_start + 1;
      auto line_end = text.find('\n', close + 2);
      const std::size_t le = line_end == std::string_view::npos ? text.size() : line_end;
      const bool lead_ok = (pos == 0 || ls <= pos) && blank(text.substr(ls, pos - ls)) &&
                           (tags.empty() || tags.back().end <= ls);
      if (lead_ok && blank(text.substr(close + 2, le - close - 2))) {
        tag.begin = ls;
        tag.end = line_end == std::string_view::npos ? text.size() : line_end + 1;
      }
    }
    tags.push_back(std::move(tag));
    pos = close + 2;
  }

  // Build the tree.
  std::vector<std::vector<Node>*> stack{&root_};
  std::vector<std::string> open;
  std::size_t cursor = 0;
  for (const auto& t : tags) {
    if (t.begin > cursor) stack.back()->push_back({Node::kText, std::string(text.substr(cursor, t.begin - cursor)), {}});
    cursor = t.end;
    switch (t.sigil) {
      case 0: stack.back()->push_back({Node::kVar, t.key, {}}); break;
      case '!': break;
      case '#':
      case '^': {
        stack.back()->push_back({t.sigil == '#' ? Node::kSection : Node::kInverted, t.key, {}});
        stack.push_back(&stack.back()->back().children);
        open.push_back(t.key);
        break;
      }
      case '/': {
        if (open.empty() || open.back() != t.key) {
          throw Error(Errc::kSyntaxError, name_ + ": unexpected {{/" + t.key + "}}");
        }
        open.pop_back();
        stack.pop_back();
        break;
      }
    }
  }
  if (!open.empty()) throw Error(Errc::kSyntaxError, name_ + ": unclosed section " + open.back());
  if (cursor < text.size()) root_.push_back({Node::kText, std::string(text.substr(cursor)), {}});
}

const TemplateValue* Template::lookup(const std::string& key, const std::vector<const TemplateContext*>& stack) const {
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    auto f = (*it)->values.find(key);
    if (f != (*it)->values.end()) return &f->second;
  }
  return nullptr;
}

void Template::render_nodes(const std::vector<Node>& nodes, std::vector<const TemplateContext*>& stack,
                            std::string& out) const {
  for (const auto& n : nodes) {
    if (n.kind == Node::kText) {
      out += n.text;
      continue;
    }
    const TemplateValue* v = lookup(n.text, stack);
    if (n.kind == Node::kVar) {
      if (!v) throw Error(Errc::kInvalidArgument, name_ + ": no value for {{" + n.text + "}}");
      if (const auto* s = std::get_if<std::string>(&v->v)) out += *s;
      else if (const auto* b = std::get_if<bool>(&v->v)) out += *b ? "true" : "false";
      else throw Error(Errc::kInvalidArgument, name_ + ": {{" + n.text + "}} is a list");
      continue;
    }
    bool truthy = false;
    const std::vector<TemplateContext>* list = nullptr;
    if (v) {
      if (const auto* s = std::get_if<std::string>(&v->v)) truthy = !s->empty();
      else if (const auto* b = std::get_if<bool>(&v->v)) truthy = *b;
      else {
        list = &std::get<std::vector<TemplateContext>>(v->v);
        truthy = !list->empty();
      }
    }
    if (n.kind == Node::kInverted) {
      if (!truthy) render_nodes(n.children, stack, out);
      continue;
    }
    if (!truthy) continue;
    if (list) {
      for (const auto& item : *list) {
        stack.push_back(&item);
        render_nodes(n.children, stack, out);
        stack.pop_back();
      }
    } else {
      render_nodes(n.children, stack, out);
    }
  }
}

std::string Template::render(const TemplateContext& ctx) const {
  std::string out;
  std::vector<const TemplateContext*> stack{&ctx};
  render_nodes(root_, stack, out);
  return out;
}

}  // namespace arax::stubgen
