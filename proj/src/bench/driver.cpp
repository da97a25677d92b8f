#include "arax/bench/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <deque>
#include <exception>
#include <random>
#include <thread>

#include "arax/common/error.hpp"
#include "arax/server/runtime.hpp"

namespace arax::bench {

namespace {

using client::TaskStatus;
using Wall = std::chrono::steady_clock;

std::uint64_t wall_ns(Wall::time_point a, Wall::time_point b) {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

std::uint64_t fnv1a(std::uint64_t h, const std::vector<std::byte>& data) {
  for (auto b : data) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 1099511628211ull;
  }
  return h;
}

// Every 4-byte word is a float in [1, 2): valid input for both the float
// and the integer kernels.
std::vector<std::byte> initial_contents(std::uint64_t bytes, std::uint64_t seed) {
  std::vector<std::byte> out(bytes);
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = 0; i + 4 <= bytes; i += 4) {
    const std::uint32_t w = 0x3F800000u | static_cast<std::uint32_t>(rng() & 0x7FFFFFu);
    std::memcpy(out.data() + i, &w, 4);
  }
  return out;
}

void require_success(TaskStatus st, const std::string& what) {
  if (st != TaskStatus::kSuccess) throw Error(Errc::kTaskFailed, what + ": " + std::string(client::to_string(st)));
}

struct QueueRun {
  const QueueProgram* program = nullptr;
  client::TaskQueue queue;
  std::vector<client::TaskBuffer> buffers;
  std::vector<std::vector<std::byte>> host;
  std::uint32_t iteration = 0;
  std::size_t step = 0;
  std::uint32_t rep = 0;
  std::deque<client::TaskHandle> outstanding;

  bool exhausted() const { return iteration >= program->iterations || program->steps.empty(); }
  void advance_cursor() {
    if (++rep < program->steps[step].repeat) return;
    rep = 0;
    if (++step < program->steps.size()) return;
    step = 0;
    ++iteration;
  }
};

class InstanceRun {
 public:
  InstanceRun(const InstanceSpec& spec, std::size_t index, std::uint64_t seed, std::uint32_t window)
      : spec_(spec), index_(index), seed_(seed), window_(window) {}

  const InstanceSpec& spec() const { return spec_; }
  bool started() const { return session_ != nullptr; }
  bool finished() const { return finished_; }

  void start(server::Runtime& rt) {
    session_ = rt.open_session(spec_.priority);
    metrics_.start_ns = rt.clock().now_ns();
    metrics_.end_ns = metrics_.start_ns;
    for (std::size_t qi = 0; qi < spec_.queues.size(); ++qi) {
      QueueRun q;
      q.program = &spec_.queues[qi];
      q.queue = client::a_acquire(*session_);
      for (std::size_t b = 0; b < q.program->buffers.size(); ++b) {
        const auto bytes = q.program->buffers[b];
        q.buffers.push_back(client::a_allocate(*session_, bytes));
        q.host.push_back(initial_contents(bytes, seed_ * 1000003 + index_ * 10007 + qi * 101 + b));
      }
      queues_.push_back(std::move(q));
    }
    if (queues_.empty()) finish();
  }

  /// Retires completed tasks and issues more. Returns whether anything happened.
  bool advance(std::vector<std::uint64_t>& latencies) {
    bool progress = false;
    bool all_done = true;
    for (auto& q : queues_) {
      while (!q.outstanding.empty() && session_->poll(q.outstanding.front()) != TaskStatus::kPending) {
        client::TaskTiming timing;
        require_success(client::a_wait(q.outstanding.front(), &timing), spec_.name);
        metrics_.end_ns = std::max(metrics_.end_ns, timing.end_ns);
        ++metrics_.tasks;
        q.outstanding.pop_front();
        progress = true;
      }
      while (!q.exhausted() && q.outstanding.size() < window_) {
        const Step& s = q.program->steps[q.step];
        if (s.op == Step::Op::kKernel) {
          std::vector<client::TaskArgRef> args;
          for (std::size_t i = 0; i < s.buffers.size(); ++i) args.push_back({q.buffers[s.buffers[i]], s.dirs[i]});
          const auto scalars = backends::pack_i64(s.scalars);
          const auto t0 = Wall::now();
          auto h = session_->try_issue(q.queue, {s.kernel, args, scalars});
          const auto t1 = Wall::now();
          if (!h) break;
          latencies.push_back(wall_ns(t0, t1));
          q.outstanding.push_back(*h);
        } else if (s.op == Step::Op::kSyncTo) {
          q.outstanding.push_back(client::a_sync_to(q.queue, q.buffers[s.buffers[0]], q.host[s.buffers[0]]));
        } else {
          q.outstanding.push_back(client::a_sync_from(q.queue, q.buffers[s.buffers[0]], q.host[s.buffers[0]]));
        }
        q.advance_cursor();
        progress = true;
      }
      if (!q.exhausted() || !q.outstanding.empty()) all_done = false;
    }
    if (all_done && !finished_) {
      finish();
      progress = true;
    }
    return progress;
  }

  InstanceMetrics metrics() const { return metrics_; }

 private:
  void finish() {
    std::uint64_t h = 1469598103934665603ull;
    for (auto& q : queues_) {
      for (const auto& b : q.host) h = fnv1a(h, b);
      for (const auto& b : q.buffers) client::a_free(b);
      client::a_release(q.queue);
    }
    metrics_.name = spec_.name;
    metrics_.priority = spec_.priority == shm::Priority::kHigh ? "high" : "low";
    metrics_.arrival_ns = spec_.arrival_ns;
    metrics_.turnaround_ns = metrics_.end_ns - metrics_.start_ns;
    metrics_.output_hash = h;
    finished_ = true;
  }

  const InstanceSpec& spec_;
  std::size_t index_;
  std::uint64_t seed_;
  std::uint32_t window_;
  std::unique_ptr<client::Session> session_;
  std::vector<QueueRun> queues_;
  InstanceMetrics metrics_;
  bool finished_ = false;
};

void drive_virtual(server::Runtime& rt, std::vector<InstanceRun>& runs, std::vector<std::uint64_t>& latencies) {
  auto& clock = dynamic_cast<VirtualClock&>(rt.clock());
  auto& srv = rt.server();
  while (true) {
    const auto now = clock.now_ns();
    std::optional<std::uint64_t> next_arrival;
    bool all_finished = true;
    bool progress = false;
    for (auto& r : runs) {
      if (!r.started()) {
        if (r.spec().arrival_ns <= now) {
          r.start(rt);
          progress = true;
        } else {
          next_arrival = std::min(next_arrival.value_or(r.spec().arrival_ns), r.spec().arrival_ns);
        }
      }
      if (r.started() && !r.finished()) progress |= r.advance(latencies);
      all_finished &= r.finished();
    }
    if (all_finished) return;
    if (progress || srv.pump()) continue;
    auto target = srv.next_event_ns();
    if (next_arrival && (!target || *next_arrival < *target)) target = next_arrival;
    if (!target) throw Error(Errc::kSimulationStalled, "workload cannot make progress");
    clock.advance_to(*target);
  }
}

void drive_real(server::Runtime& rt, std::vector<InstanceRun>& runs, std::vector<std::uint64_t>& latencies) {
  const auto origin = rt.clock().now_ns();
  std::vector<std::vector<std::uint64_t>> per_thread(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        auto& r = runs[i];
        while (rt.clock().now_ns() < origin + r.spec().arrival_ns) {
          std::this_thread::sleep_for(std::chrono::nanoseconds(origin + r.spec().arrival_ns - rt.clock().now_ns()));
        }
        r.start(rt);
        while (!r.finished()) {
          if (!r.advance(per_thread[i])) std::this_thread::yield();
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& v : per_thread) latencies.insert(latencies.end(), v.begin(), v.end());
}

std::uint64_t median(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  return v.empty() ? 0 : v[v.size() / 2];
}

std::vector<TransferSample> transfer_sweep(server::Runtime& rt, const TransferSweep& sweep, std::uint64_t seed) {
  std::vector<TransferSample> out;
  if (sweep.sizes.empty()) return out;
  auto session = rt.open_session();
  auto q = client::a_acquire(*session);
  for (auto bytes : sweep.sizes) {
    const auto src = initial_contents(bytes, seed + bytes);
    std::vector<std::byte> dst(bytes, std::byte{1});
    auto buf = client::a_allocate(*session, bytes);
    std::vector<std::uint64_t> staged, direct;
    std::vector<double> ratios;
    // One untimed round each so both sides start with touched memory.
    require_success(client::a_wait(client::a_sync_to(q, buf, src)), "transfer");
    std::memcpy(dst.data(), src.data(), bytes);
    for (std::uint32_t r = 0; r < sweep.reps; ++r) {
      auto t0 = Wall::now();
      require_success(client::a_wait(client::a_sync_to(q, buf, src)), "transfer");
      auto t1 = Wall::now();
      staged.push_back(wall_ns(t0, t1));
      t0 = Wall::now();
      std::memcpy(dst.data(), src.data(), bytes);
      t1 = Wall::now();
      direct.push_back(std::max<std::uint64_t>(1, wall_ns(t0, t1)));
      ratios.push_back(static_cast<double>(staged.back()) / static_cast<double>(direct.back()));
    }
    client::a_free(buf);
    TransferSample s{bytes, median(staged), median(direct), 0.0};
    std::sort(ratios.begin(), ratios.end());
    s.ratio = ratios[ratios.size() / 2];
    out.push_back(s);
  }
  client::a_release(q);
  return out;
}

}  // namespace

Metrics run_workload(const WorkloadSpec& spec, const server::ServerConfig& config, const RunOptions& options) {
  return run_workload(spec, config, options, server::default_dispatch());
}

Metrics run_workload(const WorkloadSpec& spec, const server::ServerConfig& config, const RunOptions& options,
                     server::DispatchTable dispatch) {
  validate_workload(spec, dispatch);
  if (options.window == 0 || options.window >= shm::kDefaultQueueCapacity) {
    throw Error(Errc::kInvalidArgument, "window must be in [1, ring capacity)");
  }
  server::ServerConfig cfg = config;
  if (options.mode) cfg.options.sharing = *options.mode;
  for (const auto& [k, occ] : spec.occupancy) cfg.occupancy[k] = occ;

  server::RuntimeOptions ropts;
  ropts.virtual_clock = options.virtual_clock;
  server::Runtime rt(cfg, ropts, std::move(dispatch));

  Metrics m;
  m.workload = spec.name;
  m.mode = std::string(server::to_string(cfg.options.sharing));
  m.clock = options.virtual_clock ? "virtual" : "real";
  m.seed = spec.seed;

  std::vector<InstanceRun> runs;
  runs.reserve(spec.instances.size());
  for (std::size_t i = 0; i < spec.instances.size(); ++i) runs.emplace_back(spec.instances[i], i, spec.seed, options.window);
  if (options.virtual_clock) {
    drive_virtual(rt, runs, m.issue_latency_ns);
  } else {
    drive_real(rt, runs, m.issue_latency_ns);
  }
  std::optional<std::uint64_t> first_start;
  std::uint64_t last_end = 0;
  for (const auto& r : runs) {
    auto im = r.metrics();
    first_start = std::min(first_start.value_or(im.start_ns), im.start_ns);
    last_end = std::max(last_end, im.end_ns);
    m.tasks += im.tasks;
    m.instances.push_back(std::move(im));
  }
  m.makespan_ns = first_start ? last_end - *first_start : 0;

  auto& srv = rt.server();
  for (std::size_t d = 0; d < srv.device_count(); ++d) {
    const auto id = static_cast<backends::DeviceId>(d);
    const auto st = srv.device_stats(id);
    m.devices.push_back({id, srv.device_descriptor(id).name, st.busy_ns, st.launches});
  }
  const auto stats = srv.stats();
  m.migrations = stats.migrations;
  m.bytes_moved = stats.bytes_moved;
  // Measured last so sweep traffic stays out of the device and makespan figures.
  m.transfers = transfer_sweep(rt, spec.transfers, spec.seed);
  return m;
}

}  // namespace arax::bench
