#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "arax/bench/driver.hpp"
#include "arax/common/error.hpp"
#include "arax/server/runtime.hpp"
#include "support.hpp"

using namespace arax;
using namespace arax::bench;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an arax::Error");
  return Errc::kIo;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Metrics without_wall_clock(Metrics m) {
  m.issue_latency_ns.clear();
  for (auto& t : m.transfers) t.staged_ns = t.direct_ns = 0, t.ratio = 0;
  return m;
}

void check_consistency(const WorkloadSpec& spec, const Metrics& m) {
  CHECK(m.tasks == spec.task_count());
  std::uint64_t max_end = 0, min_start = UINT64_MAX, busy = 0;
  for (const auto& i : m.instances) {
    max_end = std::max(max_end, i.end_ns);
    min_start = std::min(min_start, i.start_ns);
    CHECK(i.turnaround_ns == i.end_ns - i.start_ns);
    CHECK(i.start_ns >= i.arrival_ns);
  }
  if (!m.instances.empty()) CHECK(m.makespan_ns >= max_end - min_start);
  for (const auto& d : m.devices) busy += d.busy_ns;
  CHECK(busy <= m.devices.size() * m.makespan_ns);
}

WorkloadSpec relax_workload(std::uint32_t iterations) {
  return parse_workload(R"({"name": "relax", "instances": [{"name": "solo", "queues": [{
      "buffers": [16384, 16384], "iterations": )" + std::to_string(iterations) + R"(,
      "steps": [{"op": "kernel", "kernel": "grid_relax", "args": [[0, "out"], [1, "in"]], "scalars": [64, 64, 1]}]}]}]})");
}

}  // namespace

TEST_CASE("empty workload") {
  WorkloadSpec w;
  w.name = "empty";
  const auto m = run_workload(w, testing::config(1));
  CHECK(m.makespan_ns == 0);
  CHECK(m.tasks == 0);
  CHECK(m.instances.empty());
  CHECK(to_csv(Metrics{}) == std::string(kCsvHeader) + "\n");
}

TEST_CASE("single queue: turnaround equals makespan") {
  const auto spec = relax_workload(100);
  const auto m = run_workload(spec, testing::config(1));
  REQUIRE(m.instances.size() == 1);
  CHECK(m.tasks == 100);
  CHECK(m.instances[0].turnaround_ns == m.makespan_ns);
  CHECK(m.makespan_ns > 0);
  check_consistency(spec, m);
}

TEST_CASE("spatial sharing beats time slicing on the gaussian analog") {
  const auto spec = scenario("sharing_4x");
  const auto cfg = scenario_config("sharing_4x");
  const auto shared = run_workload(spec, cfg, {true, server::SharingMode::kShared});
  const auto sliced = run_workload(spec, cfg, {true, server::SharingMode::kTimeSlice});
  CHECK(shared.mode == "shared");
  CHECK(sliced.mode == "timeslice");
  CHECK(shared.makespan_ns < sliced.makespan_ns);
  check_consistency(spec, shared);
  check_consistency(spec, sliced);
  // Identical programs compute identical results however they were scheduled.
  for (std::size_t i = 0; i < 4; ++i) CHECK(shared.instances[i].output_hash == sliced.instances[i].output_hash);
}

TEST_CASE("scenarios") {
  const auto dispatch = server::default_dispatch();
  CHECK(scenario_names().size() == 7);
  for (const auto& n : scenario_names()) {
    CAPTURE(n);
    const auto w = scenario(n);
    CHECK(w.name == n);
    validate_workload(w, dispatch);
    CHECK_FALSE(scenario_config(n).devices.empty());
    CHECK(parse_workload(workload_to_json(w)) == w);
    CHECK(scenario(n) == w);
  }
  CHECK(code_of([] { scenario("nope"); }) == Errc::kUnknownScenario);
  CHECK(code_of([] { scenario_config("nope"); }) == Errc::kUnknownScenario);

  const auto launch = scenario("launch_overhead");
  REQUIRE(launch.instances.size() == 1);
  REQUIRE(launch.instances[0].queues.size() == 1);
  CHECK(launch.task_count() == 10000);
  CHECK(launch.instances[0].queues[0].steps[0].kernel == "noop");

  const auto sweep = scenario("transfer_sweep").transfers;
  CHECK(sweep.sizes.front() == 4096);
  CHECK(sweep.sizes.back() == 64ull << 20);

  const auto elastic = scenario("elastic_priority");
  REQUIRE(elastic.instances.size() == 2);
  CHECK(elastic.instances[0].priority == shm::Priority::kLow);
  CHECK(elastic.instances[0].queues.size() == 2);
  CHECK(elastic.instances[1].priority == shm::Priority::kHigh);
  CHECK(elastic.instances[1].arrival_ns > 0);
  CHECK(scenario_config("elastic_priority").devices.size() == 2);
}

TEST_CASE("shipped workload files match the scenarios") {
  for (const auto& n : scenario_names()) {
    CAPTURE(n);
    const auto path = std::filesystem::path(ARAX_BENCH_DIR) / "workloads" / (n + ".json");
    REQUIRE(std::filesystem::exists(path));
    CHECK(load_workload(path.string()) == scenario(n));
  }
  const auto occ1 = load_workload(std::string(ARAX_BENCH_DIR) + "/workloads/sharing_4x_occ1.json");
  CHECK(occ1.occupancy.at("gaussian_step") == 1.0);
  CHECK(occ1.instances == scenario("sharing_4x").instances);
}

TEST_CASE("shipped server configs match the scenarios") {
  for (const auto& n : scenario_names()) {
    CAPTURE(n);
    const auto cfg = server::load_server_config(std::string(ARAX_BENCH_DIR) + "/configs/" + n + ".json");
    const auto want = scenario_config(n);
    REQUIRE(cfg.devices.size() == want.devices.size());
    for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
      CHECK(cfg.devices[i].name == want.devices[i].name);
      CHECK(cfg.devices[i].type == want.devices[i].type);
      CHECK(cfg.devices[i].speed_factor == want.devices[i].speed_factor);
      CHECK(cfg.devices[i].mem_capacity == want.devices[i].mem_capacity);
      CHECK(cfg.devices[i].kernel_set == want.devices[i].kernel_set);
      CHECK(cfg.devices[i].reload_penalty_ms == want.devices[i].reload_penalty_ms);
    }
    CHECK(cfg.options.policy == want.options.policy);
    CHECK(cfg.options.force_migrate_every == want.options.force_migrate_every);
  }
}

TEST_CASE("workload file errors") {
  CHECK(code_of([] { parse_workload("{"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_workload(R"({"instances": [{"priority": "urgent"}]})"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_workload(R"({"instances": [{"queues": [{"steps": [{"op": "jump"}]}]}]})"); }) ==
        Errc::kConfig);
  CHECK(code_of([] { parse_workload(R"({"occupancy": {"noop": 2.0}})"); }) == Errc::kConfig);
  const auto unknown = parse_workload(
      R"({"instances": [{"queues": [{"steps": [{"op": "kernel", "kernel": "warp_drive"}]}]}]})");
  CHECK(code_of([&] { run_workload(unknown, testing::config(1)); }) == Errc::kUnknownKernel);
  const auto out_of_range = parse_workload(R"({"instances": [{"queues": [{"steps": [{"op": "sync_to", "buffer": 0}]}]}]})");
  CHECK(code_of([&] { run_workload(out_of_range, testing::config(1)); }) == Errc::kConfig);
}

TEST_CASE("a failing task aborts the run") {
  const auto w = parse_workload(R"({"instances": [{"queues": [{"buffers": ["1GiB"],
      "steps": [{"op": "kernel", "kernel": "vec_increment", "args": [[0, "inout"]]}]}]}]})");
  CHECK(code_of([&] { run_workload(w, testing::config(1, 64ull << 20)); }) == Errc::kTaskFailed);
}

TEST_CASE("virtual clock runs are deterministic") {
  for (const char* n : {"sharing_2x", "elastic_priority", "migration_stress"}) {
    CAPTURE(n);
    const auto spec = scenario(n);
    const auto a = run_workload(spec, scenario_config(n));
    const auto b = run_workload(spec, scenario_config(n));
    CHECK(without_wall_clock(a) == without_wall_clock(b));
    check_consistency(spec, a);
  }
}

TEST_CASE("forced migration leaves outputs unchanged") {
  const auto spec = scenario("migration_stress");
  auto still = scenario_config("migration_stress");
  still.options.force_migrate_every = 0;
  const auto moved = run_workload(spec, scenario_config("migration_stress"));
  const auto fixed = run_workload(spec, still);
  CHECK(moved.migrations > 0);
  CHECK(fixed.migrations == 0);
  REQUIRE(moved.instances.size() == fixed.instances.size());
  for (std::size_t i = 0; i < moved.instances.size(); ++i) CHECK(moved.instances[i].output_hash == fixed.instances[i].output_hash);
}

TEST_CASE("csv report and parse-back") {
  auto spec = scenario("sharing_2x");
  spec.transfers = {{4096, 65536}, 2};
  const auto m = run_workload(spec, scenario_config("sharing_2x"));
  REQUIRE(m.transfers.size() == 2);
  CHECK(m.transfers[0].ratio > 0);
  CHECK(m.issue_latency_ns.size() == 800);

  const auto dir = std::filesystem::temp_directory_path() / ("arax_bench_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  report(m, (dir / "a.csv").string());
  report(m, (dir / "b.csv").string());
  const auto text = slurp(dir / "a.csv");
  CHECK(text == slurp(dir / "b.csv"));
  CHECK(text == to_csv(m));
  CHECK(parse_csv(text) == m);
  std::filesystem::remove_all(dir);

  CHECK(code_of([&] { report(m, "/nonexistent-dir/x.csv"); }) == Errc::kIo);
  CHECK(code_of([] { parse_csv("bogus\n"); }) == Errc::kSyntaxError);
  CHECK(code_of([] { parse_csv(std::string(kCsvHeader) + "\nwhat,1\n"); }) == Errc::kSyntaxError);
}

TEST_CASE("real clock run completes") {
  const auto spec = relax_workload(50);
  RunOptions opts;
  opts.virtual_clock = false;
  const auto m = run_workload(spec, testing::config(2), opts);
  CHECK(m.clock == "real");
  CHECK(m.tasks == 50);
  CHECK(m.instances[0].turnaround_ns > 0);
  CHECK(m.issue_latency_ns.size() == 50);
}
