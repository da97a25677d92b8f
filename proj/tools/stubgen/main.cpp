// stubgen: header -> API spec -> annotated spec -> client stubs + server registrations.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "arax/common/error.hpp"
#include "arax/stubgen/annotations.hpp"
#include "arax/stubgen/generator.hpp"
#include "arax/stubgen/parser.hpp"

namespace fs = std::filesystem;
using namespace arax::stubgen;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw arax::Error(arax::Errc::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw arax::Error(arax::Errc::kIo, "cannot write " + path);
  out << text;
}

void report(const ApiSpec& spec) {
  const auto total = spec.functions.size();
  const auto done = spec.complete_count();
  std::fprintf(stderr, "%zu functions, %zu complete (%.1f%%)\n", total, done,
               total ? 100.0 * static_cast<double>(done) / static_cast<double>(total) : 0.0);
  for (const auto& f : spec.functions) {
    if (f.complete()) continue;
    std::string params;
    for (const auto& p : f.unresolved_params()) params += (params.empty() ? "" : ", ") + p;
    std::fprintf(stderr, "  unresolved: %s (%s)\n", f.name.c_str(), params.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate remoting stubs from a C API header"};
  app.require_subcommand(1);

  std::string header, spec_path, ann_path, out, templates, kernels, stem = "api", ns = "arax_stubs";
  bool partial = false, quiet = false;

  auto* parse = app.add_subcommand("parse", "Parse a header into a JSON API spec");
  parse->add_option("header", header)->required()->check(CLI::ExistingFile);
  parse->add_option("-o,--output", out, "Output file, '-' for stdout")->default_val("-");
  parse->add_flag("-q,--quiet", quiet);

  auto* merge = app.add_subcommand("merge", "Apply an annotation file to a spec");
  merge->add_option("spec", spec_path)->required()->check(CLI::ExistingFile);
  merge->add_option("annotations", ann_path)->required()->check(CLI::ExistingFile);
  merge->add_option("-o,--output", out)->default_val("-");
  merge->add_flag("--allow-partial", partial, "Do not fail when functions stay unresolved");
  merge->add_flag("-q,--quiet", quiet);

  auto* gen = app.add_subcommand("gen", "Generate client stubs and server registrations");
  gen->add_option("spec", spec_path)->required()->check(CLI::ExistingFile);
  gen->add_option("-t,--templates", templates)->required()->check(CLI::ExistingDirectory);
  gen->add_option("-o,--output-dir", out)->required();
  gen->add_option("-k,--kernels", kernels, "function = implementation manifest")->check(CLI::ExistingFile);
  gen->add_option("--stem", stem);
  gen->add_option("--namespace", ns);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*parse) {
      auto r = parse_api(slurp(header), fs::path(header).filename().string());
      emit(out, to_json(r.spec));
      if (!quiet) report(r.spec);
    } else if (*merge) {
      auto spec = merge_annotations(spec_from_json(slurp(spec_path)), parse_annotations(slurp(ann_path)),
                                    partial ? MergeMode::kAllowPartial : MergeMode::kRequireComplete);
      emit(out, to_json(spec));
      if (!quiet) report(spec);
    } else if (*gen) {
      const auto spec = spec_from_json(slurp(spec_path));
      const auto manifest = kernels.empty() ? KernelManifest{} : parse_manifest(slurp(kernels));
      const auto art = generate_stubs(spec, load_templates(templates), manifest, {stem, ns});
      fs::create_directories(out);
      emit((fs::path(out) / art.client_file).string(), art.client_stub);
      emit((fs::path(out) / art.server_file).string(), art.server_dispatch);
      std::fprintf(stderr, "wrote %zu stubs and %zu registrations to %s\n", art.stubs, art.registrations, out.c_str());
    }
  } catch (const arax::Error& e) {
    std::fprintf(stderr, "stubgen: %s: %s\n", std::string(arax::errc_name(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stubgen: %s\n", e.what());
    return 1;
  }
  return 0;
}
