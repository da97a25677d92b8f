#include "arax/bench/workload.hpp"

#include <json.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "arax/common/error.hpp"

namespace arax::bench {

namespace {

using nlohmann::json;
using client::ArgDirection;

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::kConfig, "workload: " + what); }

std::string_view priority_name(shm::Priority p) { return p == shm::Priority::kHigh ? "high" : "low"; }

shm::Priority parse_priority(const std::string& s) {
  if (s == "high") return shm::Priority::kHigh;
  if (s == "low") return shm::Priority::kLow;
  bad("unknown priority '" + s + "'");
}

std::string_view dir_name(ArgDirection d) {
  switch (d) {
    case ArgDirection::kIn: return "in";
    case ArgDirection::kOut: return "out";
    case ArgDirection::kInOut: break;
  }
  return "inout";
}

ArgDirection parse_dir(const std::string& s) {
  if (s == "in") return ArgDirection::kIn;
  if (s == "out") return ArgDirection::kOut;
  if (s == "inout") return ArgDirection::kInOut;
  bad("unknown direction '" + s + "'");
}

std::uint64_t size_value(const json& v) {
  if (v.is_number_unsigned() || v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) bad("negative size");
    return v.get<std::uint64_t>();
  }
  if (v.is_string()) return server::parse_size(v.get<std::string>());
  bad("size must be a number or a string like \"64MiB\"");
}

Step parse_step(const json& j) {
  Step s;
  const std::string op = j.value("op", "");
  s.repeat = j.value("repeat", 1u);
  if (s.repeat == 0) bad("repeat must be positive");
  if (op == "sync_to" || op == "sync_from") {
    s.op = op == "sync_to" ? Step::Op::kSyncTo : Step::Op::kSyncFrom;
    if (!j.contains("buffer")) bad(op + " needs a buffer");
    s.buffers.push_back(j.at("buffer").get<std::uint32_t>());
  } else if (op == "kernel") {
    s.kernel = j.value("kernel", "");
    if (s.kernel.empty()) bad("kernel step without a kernel name");
    for (const auto& a : j.value("args", json::array())) {
      if (!a.is_array() || a.size() != 2) bad("kernel args are [buffer, direction] pairs");
      s.buffers.push_back(a[0].get<std::uint32_t>());
      s.dirs.push_back(parse_dir(a[1].get<std::string>()));
    }
    for (const auto& v : j.value("scalars", json::array())) s.scalars.push_back(v.get<std::int64_t>());
  } else {
    bad("unknown op '" + op + "'");
  }
  return s;
}

json step_json(const Step& s) {
  json j;
  if (s.op == Step::Op::kKernel) {
    j["op"] = "kernel";
    j["kernel"] = s.kernel;
    json args = json::array();
    for (std::size_t i = 0; i < s.buffers.size(); ++i) args.push_back({s.buffers[i], dir_name(s.dirs[i])});
    j["args"] = args;
    if (!s.scalars.empty()) j["scalars"] = s.scalars;
  } else {
    j["op"] = s.op == Step::Op::kSyncTo ? "sync_to" : "sync_from";
    j["buffer"] = s.buffers.at(0);
  }
  if (s.repeat != 1) j["repeat"] = s.repeat;
  return j;
}

// --- scenario building blocks ---------------------------------------------

constexpr std::uint64_t kMiB = 1ull << 20;
constexpr std::int64_t kGaussN = 141;  // about 100 us per gaussian_step on the cost model

Step sync_to(std::uint32_t b) { return {Step::Op::kSyncTo, "", {b}, {}, {}, 1}; }
Step sync_from(std::uint32_t b) { return {Step::Op::kSyncFrom, "", {b}, {}, {}, 1}; }
Step kernel(std::string name, std::vector<std::uint32_t> bufs, std::vector<ArgDirection> dirs,
            std::vector<std::int64_t> scalars, std::uint32_t repeat) {
  return {Step::Op::kKernel, std::move(name), std::move(bufs), std::move(dirs), std::move(scalars), repeat};
}

// `steps` elimination passes over an n x n system and its right-hand side.
QueueProgram gaussian_program(std::uint32_t steps) {
  QueueProgram q;
  q.buffers = {static_cast<std::uint64_t>(kGaussN * kGaussN * 4), static_cast<std::uint64_t>(kGaussN * 4)};
  q.steps = {sync_to(0), sync_to(1),
             kernel("gaussian_step", {0, 1}, {ArgDirection::kInOut, ArgDirection::kInOut}, {kGaussN, 0}, steps),
             sync_from(0), sync_from(1)};
  return q;
}

// Jacobi relaxation on a side x side grid; buffer 0 is the output, 1 the input.
QueueProgram relax_program(std::int64_t side, std::int64_t iters, std::uint32_t repeat) {
  QueueProgram q;
  const auto bytes = static_cast<std::uint64_t>(side * side * 4);
  q.buffers = {bytes, bytes};
  q.steps = {sync_to(1),
             kernel("grid_relax", {0, 1}, {ArgDirection::kOut, ArgDirection::kIn}, {side, side, iters}, 1),
             kernel("memcopy", {1, 0}, {ArgDirection::kOut, ArgDirection::kIn}, {}, 1), sync_from(1)};
  q.iterations = repeat;
  return q;
}

InstanceSpec instance(std::string name, shm::Priority prio, std::uint64_t arrival_ns, std::vector<QueueProgram> qs) {
  return {std::move(name), prio, arrival_ns, std::move(qs)};
}

server::DeviceDescriptor sim_device(std::string name, backends::DeviceType type, double speed = 0.0,
                                    std::uint64_t mem = 256 * kMiB) {
  server::DeviceDescriptor d;
  d.name = std::move(name);
  d.type = type;
  d.speed_factor = speed;
  d.mem_capacity = mem;
  d.streams = 4;
  return d;
}

}  // namespace

std::uint64_t QueueProgram::task_count() const {
  std::uint64_t n = 0;
  for (const auto& s : steps) n += s.repeat;
  return n * iterations;
}

std::uint64_t WorkloadSpec::task_count() const {
  std::uint64_t n = 0;
  for (const auto& i : instances)
    for (const auto& q : i.queues) n += q.task_count();
  return n;
}

WorkloadSpec parse_workload(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(e.what());
  }
  try {
    WorkloadSpec w;
    w.name = j.value("name", "workload");
    w.seed = j.value("seed", 1ull);
    const json occupancy = j.value("occupancy", json::object());
    for (const auto& [k, v] : occupancy.items()) {
      const double occ = v.get<double>();
      if (!(occ > 0.0 && occ <= 1.0)) bad("occupancy of " + k + " must be in (0, 1]");
      w.occupancy[k] = occ;
    }
    if (j.contains("transfer_sweep")) {
      const auto& t = j.at("transfer_sweep");
      for (const auto& s : t.value("sizes", json::array())) w.transfers.sizes.push_back(size_value(s));
      w.transfers.reps = t.value("reps", 5u);
      if (w.transfers.reps == 0) bad("transfer_sweep reps must be positive");
    }
    for (const auto& ij : j.value("instances", json::array())) {
      InstanceSpec inst;
      inst.name = ij.value("name", "instance" + std::to_string(w.instances.size()));
      inst.priority = parse_priority(ij.value("priority", "low"));
      const double arrival_ms = ij.value("arrival_ms", 0.0);
      if (arrival_ms < 0 || !std::isfinite(arrival_ms)) bad("arrival_ms must be non-negative");
      inst.arrival_ns = static_cast<std::uint64_t>(std::llround(arrival_ms * 1e6));
      for (const auto& qj : ij.value("queues", json::array())) {
        QueueProgram q;
        for (const auto& b : qj.value("buffers", json::array())) q.buffers.push_back(size_value(b));
        q.iterations = qj.value("iterations", 1u);
        for (const auto& sj : qj.value("steps", json::array())) q.steps.push_back(parse_step(sj));
        inst.queues.push_back(std::move(q));
      }
      w.instances.push_back(std::move(inst));
    }
    return w;
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

WorkloadSpec load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_workload(ss.str());
}

std::string workload_to_json(const WorkloadSpec& w) {
  json j;
  j["name"] = w.name;
  j["seed"] = w.seed;
  if (!w.occupancy.empty()) j["occupancy"] = w.occupancy;
  if (!w.transfers.sizes.empty()) j["transfer_sweep"] = {{"sizes", w.transfers.sizes}, {"reps", w.transfers.reps}};
  json insts = json::array();
  for (const auto& i : w.instances) {
    json qs = json::array();
    for (const auto& q : i.queues) {
      json steps = json::array();
      for (const auto& s : q.steps) steps.push_back(step_json(s));
      qs.push_back({{"buffers", q.buffers}, {"iterations", q.iterations}, {"steps", steps}});
    }
    insts.push_back({{"name", i.name},
                     {"priority", priority_name(i.priority)},
                     {"arrival_ms", static_cast<double>(i.arrival_ns) / 1e6},
                     {"queues", qs}});
  }
  j["instances"] = insts;
  return j.dump(2) + "\n";
}

void validate_workload(const WorkloadSpec& w, const server::DispatchTable& dispatch) {
  for (const auto& [k, occ] : w.occupancy) {
    if (!dispatch.knows(k)) throw Error(Errc::kUnknownKernel, "workload " + w.name + ": unknown kernel " + k);
  }
  for (const auto& i : w.instances) {
    for (const auto& q : i.queues) {
      for (const auto& s : q.steps) {
        if (s.op == Step::Op::kKernel && !dispatch.knows(s.kernel)) {
          throw Error(Errc::kUnknownKernel, "instance " + i.name + ": unknown kernel " + s.kernel);
        }
        if (s.op == Step::Op::kKernel && s.buffers.size() != s.dirs.size()) bad("argument directions missing");
        for (auto b : s.buffers) {
          if (b >= q.buffers.size()) bad("instance " + i.name + ": buffer index " + std::to_string(b) + " out of range");
        }
      }
    }
  }
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"launch_overhead",  "transfer_sweep",   "sharing_2x",    "sharing_4x",
                                                 "elastic_priority", "migration_stress", "hetero_elastic"};
  return names;
}

WorkloadSpec scenario(std::string_view name) {
  WorkloadSpec w;
  w.name = std::string(name);
  if (name == "launch_overhead") {
    QueueProgram q;
    q.steps = {kernel("noop", {}, {}, {}, 10000)};
    w.instances = {instance("empty_kernel", shm::Priority::kLow, 0, {q})};
  } else if (name == "transfer_sweep") {
    for (std::uint64_t s = 4096; s <= 64 * kMiB; s *= 4) w.transfers.sizes.push_back(s);
    w.transfers.reps = 7;
  } else if (name == "sharing_2x" || name == "sharing_4x") {
    const int n = name == "sharing_2x" ? 2 : 4;
    w.occupancy = {{"gaussian_step", 0.25}};
    for (int i = 0; i < n; ++i) {
      w.instances.push_back(instance("gaussian" + std::to_string(i), shm::Priority::kLow, 0, {gaussian_program(400)}));
    }
  } else if (name == "elastic_priority") {
    // Low priority: two queues of about 150 ms each. High priority arrives at
    // a third of the low instance's single-device run time.
    constexpr std::uint32_t low_steps = 1500, high_steps = 600;
    const std::uint64_t t = 2ull * low_steps * 100 * kNsPerUs;
    w.instances = {instance("low", shm::Priority::kLow, 0, {gaussian_program(low_steps), gaussian_program(low_steps)}),
                   instance("high", shm::Priority::kHigh, t / 3, {gaussian_program(high_steps)})};
  } else if (name == "migration_stress") {
    for (int i = 0; i < 4; ++i) {
      std::vector<QueueProgram> qs;
      for (int k = 0; k < 2; ++k) {
        QueueProgram q;
        q.buffers = {16384, 16384};
        q.steps = {sync_to(0), sync_to(1)};
        for (int r = 0; r < 25; ++r) {
          q.steps.push_back(kernel("vec_increment", {0}, {ArgDirection::kInOut}, {1 + (i + k + r) % 3}, 1));
          q.steps.push_back(kernel("memcopy", {1, 0}, {ArgDirection::kOut, ArgDirection::kIn}, {}, 1));
          q.steps.push_back(kernel("vec_increment", {1}, {ArgDirection::kInOut}, {-1}, 1));
        }
        q.steps.push_back(sync_from(0));
        q.steps.push_back(sync_from(1));
        q.iterations = 4;
        qs.push_back(q);
      }
      w.instances.push_back(instance("app" + std::to_string(i), shm::Priority::kLow, 0, qs));
    }
  } else if (name == "hetero_elastic") {
    w.instances = {
        instance("relax", shm::Priority::kLow, 0, {relax_program(96, 4, 1500), relax_program(96, 4, 1500)}),
        instance("solve", shm::Priority::kHigh, 40 * kNsPerMs, {gaussian_program(300)})};
  } else {
    throw Error(Errc::kUnknownScenario, "unknown scenario: " + std::string(name));
  }
  return w;
}

server::ServerConfig scenario_config(std::string_view name) {
  using backends::DeviceType;
  server::ServerConfig cfg;
  if (name == "launch_overhead") {
    cfg.devices = {sim_device("cpu0", DeviceType::kCpu)};
  } else if (name == "transfer_sweep") {
    cfg.devices = {sim_device("cpu0", DeviceType::kCpu, 0.0, 512 * kMiB)};
  } else if (name == "sharing_2x" || name == "sharing_4x") {
    cfg.devices = {sim_device("gpu0", DeviceType::kSimGpu)};
  } else if (name == "elastic_priority") {
    cfg.devices = {sim_device("gpu0", DeviceType::kSimGpu), sim_device("gpu1", DeviceType::kSimGpu)};
    cfg.options.policy = server::Policy::kElastic;
  } else if (name == "migration_stress") {
    cfg.devices = {sim_device("cpu0", DeviceType::kCpu), sim_device("gpu0", DeviceType::kSimGpu),
                   sim_device("gpu1", DeviceType::kSimGpu)};
    cfg.options.force_migrate_every = 3;
  } else if (name == "hetero_elastic") {
    auto fpga = sim_device("fpga0", DeviceType::kSimFpga, 0.25);
    fpga.kernel_set = {"noop", "memcopy", "grid_relax"};
    fpga.reload_penalty_ms = 5;
    cfg.devices = {sim_device("cpu0", DeviceType::kCpu, 1.0), sim_device("gpu0", DeviceType::kSimGpu), fpga};
    cfg.options.policy = server::Policy::kElastic;
  } else {
    throw Error(Errc::kUnknownScenario, "unknown scenario: " + std::string(name));
  }
  for (std::size_t i = 0; i < cfg.devices.size(); ++i) cfg.devices[i].id = static_cast<backends::DeviceId>(i);
  return cfg;
}

WorkloadSpec only_priority(WorkloadSpec spec, shm::Priority priority) {
  std::erase_if(spec.instances, [&](const InstanceSpec& i) { return i.priority != priority; });
  return spec;
}

WorkloadSpec with_occupancy(WorkloadSpec spec, const std::string& kernel, double occupancy) {
  spec.occupancy[kernel] = occupancy;
  return spec;
}

}  // namespace arax::bench
