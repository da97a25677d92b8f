#include "arax/stubgen/parser.hpp"

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "arax/common/error.hpp"

namespace arax::stubgen {

namespace {

// ---------------------------------------------------------------------------
// Size expressions

struct Expr {
  enum Kind { kNum, kIdent, kSizeof, kBin } kind = kNum;
  std::int64_t num = 0;
  std::string text;  // identifier or sizeof type
  char op = 0;
  std::unique_ptr<Expr> lhs, rhs;
};

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  std::unique_ptr<Expr> parse() {
    auto e = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::kBadSizeExpression, "size expression '" + std::string(s_) + "': " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string word() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::unique_ptr<Expr> sum() {
    auto lhs = product();
    for (;;) {
      char op = 0;
      if (eat('+')) op = '+';
      else if (eat('-')) op = '-';
      else return lhs;
      auto e = std::make_unique<Expr>();
      e->kind = Expr::kBin;
      e->op = op;
      e->lhs = std::move(lhs);
      e->rhs = product();
      lhs = std::move(e);
    }
  }

  std::unique_ptr<Expr> product() {
    auto lhs = factor();
    for (;;) {
      char op = 0;
      if (eat('*')) op = '*';
      else if (eat('/')) op = '/';
      else return lhs;
      auto e = std::make_unique<Expr>();
      e->kind = Expr::kBin;
      e->op = op;
      e->lhs = std::move(lhs);
      e->rhs = factor();
      lhs = std::move(e);
    }
  }

  std::unique_ptr<Expr> factor() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      auto e = sum();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    auto e = std::make_unique<Expr>();
    if (std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      const std::string w = word();
      for (char c : w)
        if (!std::isdigit(static_cast<unsigned char>(c))) fail("bad number '" + w + "'");
      e->kind = Expr::kNum;
      e->num = std::stoll(w);
      return e;
    }
    const std::string w = word();
    if (w.empty()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    if (w == "sizeof") {
      if (!eat('(')) fail("sizeof needs '('");
      std::string type;
      for (;;) {
        const std::string part = word();
        if (part.empty()) break;
        type += (type.empty() ? "" : " ") + part;
      }
      if (!eat(')')) fail("sizeof needs ')'");
      e->kind = Expr::kSizeof;
      e->text = type;
      return e;
    }
    e->kind = Expr::kIdent;
    e->text = w;
    return e;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

int precedence(char op) { return op == '+' || op == '-' ? 1 : 2; }

std::string render(const Expr& e) {
  switch (e.kind) {
    case Expr::kNum: return std::to_string(e.num);
    case Expr::kIdent: return e.text;
    case Expr::kSizeof: return "sizeof(" + e.text + ")";
    case Expr::kBin: break;
  }
  const int p = precedence(e.op);
  std::string l = render(*e.lhs);
  std::string r = render(*e.rhs);
  if (e.lhs->kind == Expr::kBin && precedence(e.lhs->op) < p) l = "(" + l + ")";
  if (e.rhs->kind == Expr::kBin && (precedence(e.rhs->op) < p || (precedence(e.rhs->op) == p && (e.op == '-' || e.op == '/')))) {
    r = "(" + r + ")";
  }
  return l + " " + e.op + " " + r;
}

std::int64_t eval(const Expr& e, const std::map<std::string, std::int64_t>& vals) {
  switch (e.kind) {
    case Expr::kNum: return e.num;
    case Expr::kIdent: {
      auto it = vals.find(e.text);
      if (it == vals.end()) throw Error(Errc::kBadSizeExpression, "no value for '" + e.text + "'");
      return it->second;
    }
    case Expr::kSizeof: return static_cast<std::int64_t>(type_size(e.text));
    case Expr::kBin: break;
  }
  const auto l = eval(*e.lhs, vals);
  const auto r = eval(*e.rhs, vals);
  switch (e.op) {
    case '+': return l + r;
    case '-': return l - r;
    case '*': return l * r;
    default:
      if (r == 0) throw Error(Errc::kBadSizeExpression, "division by zero");
      return l / r;
  }
}

void check_names(const Expr& e, const FunctionSpec& fn, std::string_view whole) {
  if (e.kind == Expr::kIdent) {
    const auto* p = fn.find(e.text);
    if (p == nullptr || p->pointer) {
      throw Error(Errc::kBadSizeExpression, "size expression '" + std::string(whole) + "': '" + e.text +
                                                "' is not a scalar parameter of " + fn.name);
    }
  } else if (e.kind == Expr::kSizeof) {
    try {
      type_size(e.text);
    } catch (const Error&) {
      throw Error(Errc::kBadSizeExpression, "size expression '" + std::string(whole) + "': unknown type '" + e.text + "'");
    }
  } else if (e.kind == Expr::kBin) {
    check_names(*e.lhs, fn, whole);
    check_names(*e.rhs, fn, whole);
  }
}

// ---------------------------------------------------------------------------
// Header tokens

struct Token {
  enum Kind { kIdent, kPunct, kDoc, kEnd } kind = kEnd;
  std::string text;
  int line = 0;
  int col = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      if (pos_ >= s_.size()) break;
      const char c = s_[pos_];
      if (at_line_start_ && c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') advance();
        continue;
      }
      at_line_start_ = false;
      if (c == '/' && peek(1) == '/') {
        while (pos_ < s_.size() && s_[pos_] != '\n') advance();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        const int line = line_, col = col_;
        const bool doc = peek(2) == '*' && peek(3) != '/';
        const std::size_t start = pos_;
        advance();
        advance();
        while (pos_ < s_.size() && !(s_[pos_] == '*' && peek(1) == '/')) advance();
        if (pos_ >= s_.size()) error(line, col, "unterminated comment");
        advance();
        advance();
        if (doc) out.push_back({Token::kDoc, std::string(s_.substr(start, pos_ - start)), line, col});
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        Token t{Token::kIdent, "", line_, col_};
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
          t.text += s_[pos_];
          advance();
        }
        out.push_back(std::move(t));
        continue;
      }
      if (c == '*' || c == ',' || c == '(' || c == ')' || c == ';') {
        out.push_back({Token::kPunct, std::string(1, c), line_, col_});
        advance();
        continue;
      }
      error(line_, col_, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Token::kEnd, "", line_, col_});
    return out;
  }

  [[noreturn]] static void error(int line, int col, const std::string& what) {
    throw Error(Errc::kSyntaxError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < s_.size() ? s_[pos_ + k] : '\0'; }
  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
      at_line_start_ = true;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) advance();
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  bool at_line_start_ = true;
};

/// Canonical spelling of a base type given its words (without const).
std::optional<std::string> canonical_type(const std::vector<std::string>& words) {
  int n_unsigned = 0, n_signed = 0, n_long = 0, n_short = 0, n_int = 0, n_char = 0;
  std::vector<std::string> other;
  for (const auto& w : words) {
    if (w == "unsigned") ++n_unsigned;
    else if (w == "signed") ++n_signed;
    else if (w == "long") ++n_long;
    else if (w == "short") ++n_short;
    else if (w == "int") ++n_int;
    else if (w == "char") ++n_char;
    else other.push_back(w);
  }
  const bool integral = n_unsigned + n_signed + n_long + n_short + n_int + n_char > 0;
  if (!integral) {
    if (other.size() != 1) return std::nullopt;
    static const char* simple[] = {"void", "bool", "float", "double", "size_t", "int8_t", "uint8_t", "int16_t",
                                   "uint16_t", "int32_t", "uint32_t", "int64_t", "uint64_t"};
    for (const char* s : simple)
      if (other[0] == s) return other[0];
    return std::nullopt;
  }
  if (!other.empty() || n_unsigned + n_signed > 1 || n_int > 1 || n_char > 1 || n_long > 2 || n_short > 1) return std::nullopt;
  if (n_char) {
    if (n_long || n_short || n_int) return std::nullopt;
    return n_unsigned ? "unsigned char" : n_signed ? "signed char" : "char";
  }
  if (n_short && n_long) return std::nullopt;
  std::string base = n_short ? "short" : n_long == 2 ? "long long" : n_long == 1 ? "long" : "int";
  return n_unsigned ? "unsigned " + base : base;
}

struct Hint {
  std::optional<Direction> direction;
  std::optional<Space> space;
  std::optional<std::string> size;
};

std::map<std::string, Hint> parse_doc(const Token& doc) {
  std::map<std::string, Hint> hints;
  std::istringstream in(doc.text);
  std::string line;
  int offset = 0;
  while (std::getline(in, line)) {
    const auto at = line.find("@param");
    if (at != std::string::npos) {
      std::string rest = line.substr(at + 6);
      std::istringstream words(rest);
      std::string name;
      words >> name;
      if (name.empty()) Lexer::error(doc.line + offset, 1, "@param without a name");
      Hint h;
      // Scan the remainder for [tag] and size(...) items.
      std::size_t i = rest.find(name) + name.size();
      while (i < rest.size()) {
        if (std::isspace(static_cast<unsigned char>(rest[i]))) {
          ++i;
          continue;
        }
        if (rest[i] == '[') {
          const auto close = rest.find(']', i);
          if (close == std::string::npos) Lexer::error(doc.line + offset, 1, "unterminated '[' in @param " + name);
          const std::string tag = rest.substr(i + 1, close - i - 1);
          if (tag == "in" || tag == "out" || tag == "inout") h.direction = parse_direction(tag);
          else if (tag == "host" || tag == "device") h.space = parse_space(tag);
          else Lexer::error(doc.line + offset, 1, "unknown hint [" + tag + "]");
          i = close + 1;
          continue;
        }
        if (rest.compare(i, 5, "size(") == 0) {
          int depth = 0;
          std::size_t j = i + 4;
          for (; j < rest.size(); ++j) {
            if (rest[j] == '(') ++depth;
            if (rest[j] == ')' && --depth == 0) break;
          }
          if (j >= rest.size()) Lexer::error(doc.line + offset, 1, "unterminated size( in @param " + name);
          h.size = rest.substr(i + 5, j - i - 5);
          i = j + 1;
          continue;
        }
        break;  // free text description follows
      }
      hints[name] = h;
    }
    ++offset;
  }
  return hints;
}

std::string strip_prefix(const std::string& name) {
  if (name.size() > 2 && (name.rfind("h_", 0) == 0 || name.rfind("d_", 0) == 0)) return name.substr(2);
  return name;
}

void infer(FunctionSpec& fn, const std::map<std::string, Hint>& hints, const Token& where) {
  for (const auto& [name, h] : hints) {
    if (!fn.find(name)) Lexer::error(where.line, where.col, "@param " + name + " does not name a parameter of " + fn.name);
  }
  for (auto& p : fn.params) {
    const auto hint = hints.find(p.name);
    const Hint none;
    const Hint& h = hint == hints.end() ? none : hint->second;
    if (!p.pointer) {
      p.space = Space::kScalar;
      p.direction = Direction::kIn;
      if (h.direction && *h.direction != Direction::kIn) {
        Lexer::error(where.line, where.col, "scalar parameter " + p.name + " can only be [in]");
      }
      continue;
    }
    p.direction = h.direction ? *h.direction : (p.is_const ? Direction::kIn : Direction::kInOut);
    if (p.is_const && p.direction != Direction::kIn) {
      Lexer::error(where.line, where.col, "const pointer " + p.name + " cannot be [" + std::string(to_string(p.direction)) + "]");
    }
    if (h.space) p.space = h.space;
    else if (p.name.rfind("h_", 0) == 0 && p.name.size() > 2) p.space = Space::kHost;
    else if (p.name.rfind("d_", 0) == 0 && p.name.size() > 2) p.space = Space::kDevice;

    if (h.size) {
      p.size = normalize_size_expression(*h.size, fn);
      continue;
    }
    const std::string elem = p.base_type == "void" ? "" : " * sizeof(" + p.base_type + ")";
    for (const auto& stem : {p.name, strip_prefix(p.name)}) {
      const auto* bytes = fn.find(stem + "_size");
      if (bytes && !bytes->pointer) {
        p.size = stem + "_size";
        break;
      }
      const ParamSpec* count = nullptr;
      for (const char* suffix : {"_len", "_count"}) {
        const auto* c = fn.find(stem + suffix);
        if (c && !c->pointer) {
          count = c;
          break;
        }
      }
      if (count) {
        p.size = count->name + elem;
        break;
      }
    }
  }
}

class DeclParser {
 public:
  explicit DeclParser(std::vector<Token> toks) : t_(std::move(toks)) {}

  ParseResult run(std::string source) {
    ParseResult out;
    out.spec.source = std::move(source);
    std::optional<Token> doc;
    while (cur().kind != Token::kEnd) {
      if (cur().kind == Token::kDoc) {
        doc = cur();
        ++i_;
        continue;
      }
      FunctionSpec fn = declaration();
      if (out.spec.find(fn.name)) error(fn.line, 1, "duplicate declaration of " + fn.name);
      infer(fn, doc ? parse_doc(*doc) : std::map<std::string, Hint>{}, *doc_or(doc, fn));
      doc.reset();
      if (!fn.complete()) out.unresolved.push_back(fn.name);
      out.spec.functions.push_back(std::move(fn));
    }
    return out;
  }

 private:
  const Token& cur() const { return t_[i_]; }
  [[noreturn]] static void error(int line, int col, const std::string& what) { Lexer::error(line, col, what); }
  [[noreturn]] void error_here(const std::string& what) const { error(cur().line, cur().col, what); }

  const Token* doc_or(const std::optional<Token>& doc, const FunctionSpec& fn) {
    if (doc) return &*doc;
    fallback_ = Token{Token::kDoc, "", fn.line, 1};
    return &fallback_;
  }

  bool punct(const char* p) const { return cur().kind == Token::kPunct && cur().text == p; }
  void expect(const char* p) {
    if (!punct(p)) error_here(std::string("expected '") + p + "'" + (cur().kind == Token::kEnd ? " before end of input" : ", found '" + cur().text + "'"));
    ++i_;
  }

  /// Type words, const flag and pointer depth up to (not including) the name.
  struct TypeParts {
    std::vector<std::string> words;
    bool is_const = false;
    int pointers = 0;
    int line = 0, col = 0;
  };

  TypeParts type_and_name(std::string& name, bool name_optional) {
    TypeParts tp;
    tp.line = cur().line;
    tp.col = cur().col;
    std::vector<Token> idents;
    for (;;) {
      if (cur().kind == Token::kIdent) {
        if (cur().text == "const") {
          if (tp.pointers == 0) tp.is_const = true;
          ++i_;
          continue;
        }
        if (tp.pointers > 0) {
          idents.push_back(cur());
          ++i_;
          break;
        }
        idents.push_back(cur());
        ++i_;
        continue;
      }
      if (punct("*")) {
        ++tp.pointers;
        ++i_;
        continue;
      }
      break;
    }
    if (idents.empty()) error_here("expected a type");
    if (tp.pointers == 0 && idents.size() >= 2 && !is_type_word(idents.back().text)) {
      name = idents.back().text;
      idents.pop_back();
    } else if (tp.pointers > 0 && !is_type_word(idents.back().text) && idents.size() >= 2) {
      name = idents.back().text;
      idents.pop_back();
    } else if (!name_optional) {
      error(idents.back().line, idents.back().col, "parameter name expected");
    }
    for (const auto& t : idents) tp.words.push_back(t.text);
    return tp;
  }

  static bool is_type_word(const std::string& w) {
    static const char* words[] = {"void", "bool", "char", "short", "int", "long", "signed", "unsigned", "float",
                                  "double", "size_t", "int8_t", "uint8_t", "int16_t", "uint16_t", "int32_t",
                                  "uint32_t", "int64_t", "uint64_t"};
    for (const char* x : words)
      if (w == x) return true;
    return false;
  }

  FunctionSpec declaration() {
    FunctionSpec fn;
    fn.line = cur().line;
    std::string name;
    TypeParts ret = type_and_name(name, false);
    if (name.empty()) error(ret.line, ret.col, "function name expected");
    if (ret.pointers > 0) error(ret.line, ret.col, "pointer return types are not supported");
    auto rt = canonical_type(ret.words);
    if (!rt) error(ret.line, ret.col, "unknown type '" + join(ret.words) + "'");
    if (ret.is_const) error(ret.line, ret.col, "const return types are not supported");
    fn.name = name;
    fn.return_type = *rt;
    expect("(");
    if (cur().kind == Token::kIdent && cur().text == "void" && t_[i_ + 1].kind == Token::kPunct && t_[i_ + 1].text == ")") {
      ++i_;
    }
    while (!punct(")")) {
      if (cur().kind == Token::kEnd) error_here("unterminated parameter list");
      std::string pname;
      const int line = cur().line, col = cur().col;
      TypeParts tp = type_and_name(pname, false);
      if (tp.pointers > 1) error(line, col, "multi-level pointers are not supported");
      auto bt = canonical_type(tp.words);
      if (!bt) error(line, col, "unknown type '" + join(tp.words) + "'");
      if (*bt == "void" && tp.pointers == 0) error(line, col, "void parameter " + pname);
      if (fn.find(pname)) error(line, col, "duplicate parameter " + pname);
      ParamSpec p;
      p.name = pname;
      p.base_type = *bt;
      p.pointer = tp.pointers == 1;
      p.is_const = tp.is_const && p.pointer;
      fn.params.push_back(std::move(p));
      if (punct(",")) {
        ++i_;
        if (punct(")")) error_here("parameter expected after ','");
        continue;
      }
      if (!punct(")")) error_here("expected ',' or ')', found '" + cur().text + "'");
    }
    expect(")");
    expect(";");
    return fn;
  }

  static std::string join(const std::vector<std::string>& w) {
    std::string s;
    for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
    return s;
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
  Token fallback_;
};

}  // namespace

std::string normalize_size_expression(std::string_view expr, const FunctionSpec& fn) {
  auto e = ExprParser(expr).parse();
  check_names(*e, fn, expr);
  return render(*e);
}

std::uint64_t evaluate_size_expression(std::string_view expr,
                                       const std::vector<std::pair<std::string, std::int64_t>>& values) {
  auto e = ExprParser(expr).parse();
  std::map<std::string, std::int64_t> vals(values.begin(), values.end());
  const auto v = eval(*e, vals);
  if (v < 0) throw Error(Errc::kBadSizeExpression, "negative size from '" + std::string(expr) + "'");
  return static_cast<std::uint64_t>(v);
}

ParseResult parse_api(std::string_view header, std::string source_name) {
  return DeclParser(Lexer(header).run()).run(std::move(source_name));
}

std::string to_declaration(const FunctionSpec& fn) {
  std::string doc;
  for (const auto& p : fn.params) {
    if (!p.pointer) continue;
    doc += " * @param " + p.name + " [" + std::string(to_string(p.direction)) + "]";
    if (p.space) doc += " [" + std::string(to_string(*p.space)) + "]";
    if (p.size) doc += " size(" + *p.size + ")";
    doc += "\n";
  }
  std::string out;
  if (!doc.empty()) out += "/**\n" + doc + " */\n";
  out += fn.return_type + " " + fn.name + "(";
  for (std::size_t i = 0; i < fn.params.size(); ++i) {
    const auto& p = fn.params[i];
    if (i) out += ", ";
    if (p.is_const) out += "const ";
    out += p.base_type + (p.pointer ? "* " : " ") + p.name;
  }
  out += ");\n";
  return out;
}

}  // namespace arax::stubgen
