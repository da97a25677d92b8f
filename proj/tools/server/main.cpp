// arax-server: serves a named shared-memory segment until SIGINT/SIGTERM.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>

#include "arax/client/api.hpp"
#include "arax/common/error.hpp"
#include "arax/server/runtime.hpp"

using namespace arax;

int main(int argc, char** argv) {
  CLI::App app{"Arax runtime server"};
  std::string config_path, segment = client::default_segment_name(), arena = "512MiB";
  app.add_option("-c,--config", config_path, "Server config file")->required()->check(CLI::ExistingFile);
  app.add_option("-s,--segment", segment, "Shared memory segment name");
  app.add_option("--arena-size", arena, "Segment size");
  CLI11_PARSE(app, argc, argv);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // before any server thread starts

  try {
    server::RuntimeOptions opts;
    opts.virtual_clock = false;
    opts.segment = segment;
    opts.arena_size = server::parse_size(arena);
    const auto cfg = server::load_server_config(config_path);
    server::Runtime rt(cfg, opts);
    std::printf("serving %zu device(s) on %s\n", rt.server().device_count(), segment.c_str());
    std::fflush(stdout);
    int sig = 0;
    sigwait(&set, &sig);
    const auto st = rt.server().stats();
    std::printf("shutting down: %llu tasks completed, %llu migrations\n",
                static_cast<unsigned long long>(st.tasks_completed), static_cast<unsigned long long>(st.migrations));
  } catch (const Error& e) {
    std::fprintf(stderr, "arax-server: %s: %s\n", std::string(errc_name(e.code())).c_str(), e.what());
    return 1;
  }
  return 0;
}
