#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "arax/stubgen/api_spec.hpp"

namespace arax::stubgen {

/// Kernel-registry manifest: `function = implementation` per line, `#`
/// comments. Functions not listed bind to an implementation of their own name.
struct KernelManifest {
  std::map<std::string, std::string> slots;
  std::string slot_for(const std::string& function) const;
};

KernelManifest parse_manifest(std::string_view text);

/// The two templates a generator run needs: client.hpp.tmpl and server.hpp.tmpl.
struct TemplateSet {
  std::string client;
  std::string server;
};

TemplateSet load_templates(const std::filesystem::path& dir);

struct GenerateOptions {
  std::string stem = "api";  // names the output files and the registration function
  std::string ns = "arax_stubs";
};

struct GeneratedArtifacts {
  std::string client_file;  // suggested file names
  std::string server_file;
  std::string client_stub;
  std::string server_dispatch;
  std::size_t stubs = 0;
  std::size_t registrations = 0;
};

/// Throws kIncompleteSpec when any function is still unresolved.
GeneratedArtifacts generate_stubs(const ApiSpec& spec, const TemplateSet& templates, const KernelManifest& manifest = {},
                                  const GenerateOptions& options = {});

}  // namespace arax::stubgen
