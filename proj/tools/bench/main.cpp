// arax-bench: runs workloads against an in-process server and reports CSV metrics.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "arax/bench/driver.hpp"
#include "arax/common/error.hpp"

using namespace arax;
using namespace arax::bench;

namespace {

bool is_scenario(const std::string& name) {
  const auto& names = scenario_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

void print_summary(const Metrics& m) {
  std::printf("workload %s  mode %s  clock %s  seed %llu\n", m.workload.c_str(), m.mode.c_str(), m.clock.c_str(),
              static_cast<unsigned long long>(m.seed));
  std::printf("tasks %llu  makespan %.3f ms  migrations %llu  bytes moved %llu\n",
              static_cast<unsigned long long>(m.tasks), static_cast<double>(m.makespan_ns) / 1e6,
              static_cast<unsigned long long>(m.migrations), static_cast<unsigned long long>(m.bytes_moved));
  for (const auto& i : m.instances) {
    std::printf("  %-14s %-4s arrival %9.3f ms  turnaround %9.3f ms  tasks %llu\n", i.name.c_str(), i.priority.c_str(),
                static_cast<double>(i.arrival_ns) / 1e6, static_cast<double>(i.turnaround_ns) / 1e6,
                static_cast<unsigned long long>(i.tasks));
  }
  for (const auto& d : m.devices) {
    std::printf("  device %u %-8s busy %9.3f ms  launches %llu\n", d.id, d.name.c_str(),
                static_cast<double>(d.busy_ns) / 1e6, static_cast<unsigned long long>(d.launches));
  }
  for (const auto& t : m.transfers) {
    std::printf("  transfer %10llu B  staged %10.1f us  direct %10.1f us  ratio %.2f\n",
                static_cast<unsigned long long>(t.bytes), static_cast<double>(t.staged_ns) / 1e3,
                static_cast<double>(t.direct_ns) / 1e3, t.ratio);
  }
  if (!m.issue_latency_ns.empty()) {
    std::printf("  issue latency median %.3f us over %zu issues\n",
                static_cast<double>(m.issue_latency_median_ns()) / 1e3, m.issue_latency_ns.size());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arax workload driver"};
  app.require_subcommand(1);

  std::string workload, server_config, mode, clock = "virtual", out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a workload file or a named scenario");
  run->add_option("workload", workload, "Workload file, or a scenario name")->required();
  run->add_option("--server-config", server_config, "Server config file (default: the scenario's own)");
  run->add_option("--mode", mode)->check(CLI::IsMember({"shared", "timeslice"}));
  run->add_option("--clock", clock)->check(CLI::IsMember({"real", "virtual"}));
  run->add_option("--seed", seed);
  run->add_option("--out", out, "CSV output path");
  run->add_flag("-q,--quiet", quiet);

  auto* list = app.add_subcommand("list", "List the built-in scenarios");
  std::string shown;
  auto* show = app.add_subcommand("show", "Print a scenario as a workload file");
  show->add_option("scenario", shown)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& n : scenario_names()) std::cout << n << "\n";
      return 0;
    }
    if (*show) {
      std::cout << workload_to_json(scenario(shown));
      return 0;
    }
    const bool named = is_scenario(workload) && !std::filesystem::exists(workload);
    WorkloadSpec spec = named ? scenario(workload) : load_workload(workload);
    if (seed) spec.seed = *seed;
    server::ServerConfig cfg;
    if (!server_config.empty()) {
      cfg = server::load_server_config(server_config);
    } else if (is_scenario(spec.name)) {
      cfg = scenario_config(spec.name);
    } else {
      throw Error(Errc::kConfig, "--server-config is required for workload " + spec.name);
    }
    RunOptions opts;
    opts.virtual_clock = clock == "virtual";
    if (!mode.empty()) opts.mode = server::parse_sharing_mode(mode);
    const auto m = run_workload(spec, cfg, opts);
    if (!out.empty()) report(m, out);
    if (!quiet) print_summary(m);
  } catch (const Error& e) {
    std::fprintf(stderr, "arax-bench: %s: %s\n", std::string(errc_name(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "arax-bench: %s\n", e.what());
    return 1;
  }
  return 0;
}
