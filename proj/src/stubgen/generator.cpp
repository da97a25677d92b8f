#include "arax/stubgen/generator.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "arax/common/error.hpp"
#include "arax/stubgen/template.hpp"

namespace arax::stubgen {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool identifier(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

// Names the client template uses for its own locals.
bool reserved(const std::string& name) {
  static const std::set<std::string> words = {"queue_", "scalars_", "args_", "ret_"};
  return words.count(name) != 0 || (name.size() > 5 && name.compare(name.size() - 5, 5, "_buf_") == 0);
}

TemplateContext arg_context(const std::string& name, bool host, Direction d) {
  TemplateContext a;
  a["name"] = name;
  a["host_arg"] = host;
  a["device_arg"] = !host;
  a["direction"] = std::string(to_string(d));
  a["is_in"] = d == Direction::kIn;
  a["is_out"] = d == Direction::kOut;
  a["is_inout"] = d == Direction::kInOut;
  return a;
}

}  // namespace

std::string KernelManifest::slot_for(const std::string& function) const {
  auto it = slots.find(function);
  return it == slots.end() ? function : it->second;
}

KernelManifest parse_manifest(std::string_view text) {
  KernelManifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw Error(Errc::kSyntaxError, "manifest line " + std::to_string(n) + ": expected 'function = implementation'");
    const std::string fn = trim(line.substr(0, eq));
    const std::string slot = trim(line.substr(eq + 1));
    if (fn.empty() || slot.empty()) throw Error(Errc::kSyntaxError, "manifest line " + std::to_string(n) + ": empty name");
    if (!m.slots.emplace(fn, slot).second) throw Error(Errc::kSyntaxError, "manifest line " + std::to_string(n) + ": duplicate " + fn);
  }
  return m;
}

TemplateSet load_templates(const std::filesystem::path& dir) {
  return {read_file(dir / "client.hpp.tmpl"), read_file(dir / "server.hpp.tmpl")};
}

GeneratedArtifacts generate_stubs(const ApiSpec& spec, const TemplateSet& templates, const KernelManifest& manifest,
                                  const GenerateOptions& options) {
  const auto missing = spec.incomplete_functions();
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(Errc::kIncompleteSpec, "cannot generate stubs, unresolved functions: " + list);
  }
  if (!identifier(options.stem)) throw Error(Errc::kInvalidArgument, "stem must be an identifier: " + options.stem);
  for (const auto& [fn, slot] : manifest.slots) {
    if (!spec.find(fn)) throw Error(Errc::kUnknownFunction, "manifest names unknown function " + fn);
  }

  std::vector<TemplateContext> functions;
  for (const auto& f : spec.functions) {
    TemplateContext fc;
    fc["name"] = f.name;
    fc["return_type"] = f.return_type;
    fc["slot"] = manifest.slot_for(f.name);
    const bool returns = f.return_type != "void";
    fc["returns"] = returns;
    std::vector<TemplateContext> params, scalars, host, args;
    for (const auto& p : f.params) {
      if (reserved(p.name)) throw Error(Errc::kInvalidArgument, f.name + ": parameter name " + p.name + " is reserved");
      TemplateContext pc;
      pc["name"] = p.name;
      if (!p.pointer) {
        pc["decl"] = p.base_type + " " + p.name;
        scalars.push_back(pc);
      } else if (*p.space == Space::kDevice) {
        pc["decl"] = "::arax::client::TaskBuffer " + p.name;
        args.push_back(arg_context(p.name, false, p.direction));
      } else {
        pc["decl"] = std::string(p.is_const ? "const " : "") + p.base_type + "* " + p.name;
        TemplateContext hc;
        hc["name"] = p.name;
        hc["size"] = *p.size;
        hc["upload"] = p.direction != Direction::kOut;
        hc["download"] = p.direction != Direction::kIn;
        host.push_back(hc);
        args.push_back(arg_context(p.name, true, p.direction));
      }
      params.push_back(pc);
    }
    if (returns) args.push_back(arg_context("ret_", true, Direction::kOut));
    fc["params"] = params;
    fc["scalars"] = scalars;
    fc["host"] = host;
    fc["args"] = args;
    functions.push_back(std::move(fc));
  }

  TemplateContext root;
  root["source"] = spec.source;
  root["namespace"] = options.ns;
  root["stem"] = options.stem;
  root["count"] = std::to_string(spec.functions.size());
  root["functions"] = functions;

  GeneratedArtifacts out;
  out.client_file = options.stem + "_client.hpp";
  out.server_file = options.stem + "_server.hpp";
  out.client_stub = Template(templates.client, "client.hpp.tmpl").render(root);
  out.server_dispatch = Template(templates.server, "server.hpp.tmpl").render(root);
  out.stubs = spec.functions.size();
  out.registrations = spec.functions.size();
  return out;
}

}  // namespace arax::stubgen
