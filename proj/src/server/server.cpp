#include "arax/server/server.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstring>

#include "arax/common/backoff.hpp"
#include "arax/common/error.hpp"

namespace arax::server {

using sched::AssignKind;
using shm::SlotState;
using shm::TaskDescriptor;
using shm::TaskKind;

Policy parse_policy(std::string_view text) {
  if (text == "roundrobin" || text == "round-robin") return Policy::kRoundRobin;
  if (text == "elastic") return Policy::kElastic;
  throw Error(Errc::kConfig, "unknown policy: " + std::string(text));
}

SharingMode parse_sharing_mode(std::string_view text) {
  if (text == "shared") return SharingMode::kShared;
  if (text == "timeslice") return SharingMode::kTimeSlice;
  throw Error(Errc::kConfig, "unknown sharing mode: " + std::string(text));
}

std::string_view to_string(Policy p) { return p == Policy::kElastic ? "elastic" : "roundrobin"; }
std::string_view to_string(SharingMode m) { return m == SharingMode::kTimeSlice ? "timeslice" : "shared"; }

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kAssign: return "assign";
    case EventKind::kPop: return "pop";
    case EventKind::kComplete: return "complete";
    case EventKind::kOrphan: return "orphan";
    case EventKind::kMove: return "move";
    case EventKind::kRollback: return "rollback";
    case EventKind::kRelease: return "release";
  }
  return "?";
}

SynthesizedDeviceInfo synthesized_device_info(const std::vector<DeviceDescriptor>& devices) {
  if (devices.empty()) throw Error(Errc::kNoDevices, "no devices");
  SynthesizedDeviceInfo info{devices.front().mem_capacity, devices.front().streams};
  for (const auto& d : devices) {
    info.mem_capacity = std::min(info.mem_capacity, d.mem_capacity);
    info.streams = std::min(info.streams, d.streams);
  }
  return info;
}

namespace {

bool is_oom(const Error& e) { return e.code() == Errc::kDeviceOOM; }

std::string kernel_name_of(const TaskDescriptor& d) {
  return std::string(d.kernel_name, strnlen(d.kernel_name, shm::kKernelNameLen));
}

}  // namespace

Server::Server(shm::SharedArena& arena, std::vector<DeviceDescriptor> devices, DispatchTable dispatch,
               ServerOptions options, Clock& clock)
    : arena_(arena), clock_(clock), options_(options), dispatch_(std::move(dispatch)) {
  if (devices.empty()) throw Error(Errc::kNoDevices, "no devices");
  if (options_.threads_per_device == 0) throw Error(Errc::kConfig, "threads_per_device must be >= 1");
  if (clock_.is_virtual()) vclock_ = static_cast<VirtualClock*>(&clock_);
  for (std::size_t i = 0; i < devices.size(); ++i) {
    devices[i].id = static_cast<DeviceId>(i);
    devices[i].validate();
    DeviceState ds;
    ds.dev = std::make_unique<Device>(devices[i], clock_);
    ds.last_launch_ns = clock_.now_ns();
    devices_.push_back(std::move(ds));
  }
  selector_.resize(devices_.size());
  next_poll_ns_ = clock_.now_ns() + options_.idle_poll_ns;
  dir().server_epoch.store(static_cast<std::uint64_t>(::getpid()) << 8 | 1, std::memory_order_release);
}

Server::~Server() {
  stop();
  dir().server_epoch.store(0, std::memory_order_release);
}

void Server::start() {
  if (vclock_ || running_.exchange(true)) return;
  threads_.emplace_back([this] { scheduler_loop(); });
  const auto n = static_cast<std::uint32_t>(devices_.size() * options_.threads_per_device);
  for (std::uint32_t t = 0; t < n; ++t) threads_.emplace_back([this, t] { accelerator_loop(t); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void Server::scheduler_loop() {
  Backoff backoff(std::chrono::microseconds(1), options_.poll_cap);
  while (running_.load(std::memory_order_acquire)) {
    bool progress;
    {
      std::lock_guard lk(mu_);
      progress = tick();
    }
    if (progress) {
      backoff.reset();
    } else {
      backoff.pause();
    }
  }
}

void Server::accelerator_loop(std::uint32_t thread) {
  Backoff backoff(std::chrono::microseconds(1), options_.poll_cap);
  while (running_.load(std::memory_order_acquire)) {
    bool progress;
    {
      std::lock_guard lk(mu_);
      progress = thread_step(thread);
    }
    if (progress) {
      backoff.reset();
    } else {
      backoff.pause();
    }
  }
}

bool Server::pump() {
  std::lock_guard lk(mu_);
  bool progress = tick();
  for (auto& d : devices_) progress |= d.dev->advance();
  const auto n = static_cast<std::uint32_t>(devices_.size() * options_.threads_per_device);
  for (std::uint32_t t = 0; t < n; ++t) progress |= thread_step(t);
  return progress;
}

bool Server::step() {
  if (!vclock_) throw Error(Errc::kInvalidArgument, "step() requires a virtual clock");
  if (pump()) return true;
  const auto t = next_event_ns();
  if (!t) return false;
  vclock_->advance_to(*t);
  return true;
}

std::optional<std::uint64_t> Server::next_event_ns() const {
  std::lock_guard lk(mu_);
  const std::uint64_t now = clock_.now_ns();
  std::optional<std::uint64_t> best;
  auto consider = [&](std::uint64_t t) {
    if (t > now && (!best || t < *best)) best = t;
  };
  for (const auto& d : devices_) {
    if (auto t = d.dev->next_event_ns()) consider(*t);
  }
  for (const auto& [_, job] : jobs_) {
    if (job.phase == sched::MigrationPhase::kFinishing) consider(job.ready_ns);
  }
  if (options_.sharing == SharingMode::kTimeSlice) {
    for (const auto& d : devices_) {
      if (d.active_queue) consider(d.slice_end_ns);
    }
  }
  if (options_.policy == Policy::kElastic && devices_.size() > 1) {
    const bool low_work = std::any_of(queues_.begin(), queues_.end(), [](const auto& kv) {
      return kv.second.priority == shm::Priority::kLow && kv.second.has_work();
    });
    if (low_work) consider(next_poll_ns_);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Scheduler tick

bool Server::tick() {
  bool progress = scan_directory(false);
  progress |= process_releases();
  progress |= advance_migrations();
  progress |= assign_pending_queues();
  if (options_.policy == Policy::kElastic) progress |= elastic_poll();
  if (options_.sharing == SharingMode::kTimeSlice) progress |= timeslice_rotate();
  return progress;
}

bool Server::scan_directory(bool force) {
  auto& d = dir();
  const std::uint64_t epoch = d.change_epoch.load(std::memory_order_acquire);
  if (!force && epoch == seen_epoch_) return false;
  seen_epoch_ = epoch;
  bool progress = false;

  for (std::uint32_t slot = 0; slot < d.max_queues; ++slot) {
    auto& e = d.queues[slot];
    const auto st = static_cast<SlotState>(e.state.load(std::memory_order_acquire));
    if (st == SlotState::kFree) continue;
    const std::uint64_t h = shm::make_handle(slot, e.generation);
    auto it = queues_.find(h);
    if (it == queues_.end()) {
      const auto priority = d.sessions[e.session % shm::kMaxSessions].priority;
      it = queues_.emplace(h, QueueState{h, e.session, priority, shm::RingQueue(arena_, e.ring), 0, {}, 0, 0, false})
               .first;
      assignment_.add(h);
      progress = true;
    }
    if (st == SlotState::kReleasing && !it->second.release_pending) {
      it->second.release_pending = true;
      progress = true;
    }
  }

  for (std::uint32_t slot = 0; slot < d.max_buffers; ++slot) {
    auto& e = d.buffers[slot];
    const auto st = static_cast<SlotState>(e.state.load(std::memory_order_acquire));
    if (st == SlotState::kFree) continue;
    const std::uint64_t h = shm::make_handle(slot, e.generation);
    if (st == SlotState::kLive) {
      if (!ledger_.find(h)) {
        ledger_.track(h, e.declared_size);
        progress = true;
      }
    } else {
      progress |= buffer_frees_.insert(h).second;
    }
  }
  return progress;
}

bool Server::process_releases() {
  auto& d = dir();
  bool progress = false;
  std::vector<std::uint64_t> done;
  for (auto& [h, q] : queues_) {
    if (!q.release_pending) continue;
    if (q.inflight && q.inflight->token.done()) {
      auto inf = std::move(*q.inflight);
      q.inflight.reset();
      finalize(q, inf.desc, inf.token.status(), inf.busy, inf.token.start_ns(), inf.token.end_ns());
    }
    if (q.inflight || jobs_.count(h)) continue;
    spill_queue(q);
    done.push_back(h);
  }
  for (std::uint64_t h : done) {
    auto& q = queues_.at(h);
    log(EventKind::kRelease, q, 0);
    for (auto& ds : devices_) {
      if (ds.active_queue == h) ds.active_queue.reset();
    }
    const bool high = q.priority == shm::Priority::kHigh;
    const auto kind = assignment_.state(h).kind;
    if (kind == AssignKind::kUnassigned || kind == AssignKind::kAssigned) assignment_.release(h);
    assignment_.forget(h);
    const std::uint32_t session = q.session;
    queues_.erase(h);
    if (high && options_.policy == Policy::kElastic) {
      const bool session_left = std::none_of(queues_.begin(), queues_.end(), [&](const auto& kv) {
        return kv.second.priority == shm::Priority::kHigh;
      });
      if (session_left) {
        // Departure: the reserved device becomes eligible for expansion again.
        for (auto& ds : devices_) ds.reserved_for_high = false;
        high_sessions_.clear();
        execute_plans(sched::elastic_rebalance(sched::ElasticEvent::kHighPriorityDeparture, cluster_view()),
                      "departure", false);
      } else {
        (void)session;
      }
    }
    auto& e = d.queues[shm::handle_slot(h)];
    {
      shm::SharedLock lk(d.mutex);
      if (e.generation == shm::handle_generation(h)) {
        e.generation += 1;
        e.state.store(static_cast<std::uint32_t>(SlotState::kFree), std::memory_order_release);
      }
    }
    d.change_epoch.fetch_add(1, std::memory_order_acq_rel);
    progress = true;
  }

  for (auto it = buffer_frees_.begin(); it != buffer_frees_.end();) {
    const std::uint64_t h = *it;
    if (auto* e = ledger_.find(h)) {
      if (e->busy > 0) {
        ++it;
        continue;
      }
      if (e->residency == Residency::kDeviceResident) devices_.at(e->allocation.device).dev->free(e->allocation);
      ledger_.erase(h);
    }
    auto& be = d.buffers[shm::handle_slot(h)];
    {
      shm::SharedLock lk(d.mutex);
      if (be.generation == shm::handle_generation(h) &&
          be.state.load(std::memory_order_acquire) == static_cast<std::uint32_t>(SlotState::kReleasing)) {
        be.generation += 1;
        be.state.store(static_cast<std::uint32_t>(SlotState::kFree), std::memory_order_release);
      }
    }
    d.change_epoch.fetch_add(1, std::memory_order_acq_rel);
    it = buffer_frees_.erase(it);
    progress = true;
  }
  return progress;
}

void Server::spill_queue(QueueState& q) {
  for (std::uint64_t b : ledger_.bound_to(q.handle)) {
    auto* e = ledger_.find(b);
    enforce_single_valid_copy(*e);
    e->queue.reset();
  }
}

std::optional<std::string> Server::head_kernel(const QueueState& q) const {
  auto rec = q.ring.peek();
  if (!rec) return std::nullopt;
  const auto* desc = arena_.at<TaskDescriptor>(rec->descriptor);
  if (desc->kind != TaskKind::kCompute) return std::nullopt;
  return kernel_name_of(*desc);
}

std::vector<bool> Server::feasible_devices(const QueueState& q) const {
  std::vector<bool> ok(devices_.size(), true);
  const auto kernel = head_kernel(q);
  if (!kernel) return ok;
  bool any = false;
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    const auto& desc = devices_[i].dev->descriptor();
    ok[i] = desc.supports(*kernel) && dispatch_.lookup(*kernel, desc.type) != nullptr;
    any |= ok[i];
  }
  // Nobody can run it: place anywhere and let execution report UnknownKernel.
  if (!any) ok.assign(devices_.size(), true);
  return ok;
}

std::optional<DeviceId> Server::select_device(const QueueState& q) {
  auto feasible = feasible_devices(q);
  if (options_.policy == Policy::kElastic && devices_.size() > 1) {
    if (q.priority == shm::Priority::kHigh) {
      auto reserved = std::find_if(devices_.begin(), devices_.end(), [](const DeviceState& d) { return d.reserved_for_high; });
      if (reserved == devices_.end()) {
        handle_high_arrival();
        reserved = std::find_if(devices_.begin(), devices_.end(), [](const DeviceState& d) { return d.reserved_for_high; });
      }
      if (reserved != devices_.end()) {
        const auto id = static_cast<DeviceId>(reserved - devices_.begin());
        if (feasible[id]) return id;
      }
    } else {
      // Pack a low-priority session onto the device its other queues use.
      for (const auto& [h, other] : queues_) {
        if (other.session != q.session || h == q.handle) continue;
        const auto& st = assignment_.state(h);
        if (st.kind == AssignKind::kAssigned && feasible[st.device] && !devices_[st.device].reserved_for_high) {
          return st.device;
        }
      }
      auto masked = feasible;
      bool any = false;
      for (std::size_t i = 0; i < masked.size(); ++i) {
        masked[i] = masked[i] && !devices_[i].reserved_for_high;
        any |= masked[i];
      }
      if (any) feasible = masked;
    }
  }
  return selector_.select(feasible);
}

void Server::assign_queue(QueueState& q, DeviceId device) {
  auto& ds = devices_.at(device);
  const std::uint32_t thread = device * options_.threads_per_device + (ds.next_thread++ % options_.threads_per_device);
  q.stream = ds.next_stream++ % ds.dev->descriptor().streams;
  assignment_.assign(q.handle, device, thread);
  if (q.priority == shm::Priority::kHigh) high_sessions_.insert(q.session);
  log(EventKind::kAssign, q, 0);
}

bool Server::assign_pending_queues() {
  bool progress = false;
  for (auto& [h, q] : queues_) {
    if (q.release_pending || assignment_.state(h).kind != AssignKind::kUnassigned || q.ring.empty()) continue;
    if (auto d = select_device(q)) {
      assign_queue(q, *d);
      progress = true;
    }
  }
  return progress;
}

// ---------------------------------------------------------------------------
// Elastic policy and time slicing

sched::ClusterView Server::cluster_view() const {
  sched::ClusterView view;
  const std::uint64_t now = clock_.now_ns();
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    const auto& ds = devices_[i];
    bool busy = false;
    for (const auto& [h, q] : queues_) {
      const auto& st = assignment_.state(h);
      if (st.kind != AssignKind::kUnassigned && st.device == i && q.has_work()) busy = true;
    }
    const bool quiet = now >= ds.last_launch_ns && now - ds.last_launch_ns >= options_.idle_threshold_ns;
    view.devices.push_back({static_cast<DeviceId>(i), quiet && !busy, ds.reserved_for_high});
  }
  for (const auto& [h, q] : queues_) {
    sched::QueueView v;
    v.queue = h;
    v.session = q.session;
    v.priority = q.priority;
    v.has_work = q.has_work();
    v.expanded_order = q.expanded_order;
    const auto& st = assignment_.state(h);
    if (st.kind == AssignKind::kAssigned) v.device = st.device;
    if (auto job = jobs_.find(h); job != jobs_.end()) v.device = job->second.record.plan.target;
    view.queues.push_back(v);
  }
  return view;
}

void Server::execute_plans(const std::vector<sched::MigrationPlan>& plans, const std::string& reason, bool expand) {
  for (const auto& p : plans) {
    auto it = queues_.find(p.queue);
    if (it == queues_.end()) continue;
    if (start_migration(it->second, p.target, reason)) it->second.expanded_order = expand ? ++expand_counter_ : 0;
  }
}

void Server::handle_high_arrival() {
  const auto view = cluster_view();
  const auto victim = sched::device_to_free(view);
  if (!victim) return;
  const auto plans = sched::elastic_rebalance(sched::ElasticEvent::kHighPriorityArrival, view);
  devices_[*victim].reserved_for_high = true;
  execute_plans(plans, "shrink", false);
}

bool Server::elastic_poll() {
  const std::uint64_t now = clock_.now_ns();
  if (now < next_poll_ns_) return false;
  next_poll_ns_ = now + options_.idle_poll_ns;
  if (devices_.size() < 2) return false;
  const auto view = cluster_view();
  if (std::none_of(view.devices.begin(), view.devices.end(), [](const auto& d) { return d.idle; })) return false;
  const auto plans = sched::elastic_rebalance(sched::ElasticEvent::kIdleDeviceDetected, view);
  execute_plans(plans, "expand", true);
  return !plans.empty();
}

bool Server::timeslice_rotate() {
  const std::uint64_t now = clock_.now_ns();
  bool progress = false;
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    auto& ds = devices_[i];
    std::vector<QueueState*> mine;
    for (auto& [h, q] : queues_) {
      const auto& st = assignment_.state(h);
      if (st.kind == AssignKind::kAssigned && st.device == i) mine.push_back(&q);
    }
    QueueState* active = nullptr;
    if (ds.active_queue) {
      auto it = std::find_if(mine.begin(), mine.end(), [&](QueueState* q) { return q->handle == *ds.active_queue; });
      if (it == mine.end()) {
        ds.active_queue.reset();
      } else {
        active = *it;
      }
    }
    if (active && (active->inflight || (active->has_work() && now < ds.slice_end_ns))) continue;

    // Next queue with work after the active one, in handle order.
    QueueState* next = nullptr;
    if (!mine.empty()) {
      std::size_t start = 0;
      if (active) start = static_cast<std::size_t>(std::find(mine.begin(), mine.end(), active) - mine.begin()) + 1;
      for (std::size_t k = 0; k < mine.size(); ++k) {
        QueueState* cand = mine[(start + k) % mine.size()];
        if (cand->has_work()) {
          next = cand;
          break;
        }
      }
    }
    if (next == active) {
      if (active) ds.slice_end_ns = now + options_.quantum_ns;
      continue;
    }
    if (next) {
      ds.active_queue = next->handle;
      ds.slice_end_ns = now + options_.quantum_ns;
    } else {
      ds.active_queue.reset();
    }
    progress = true;
  }
  return progress;
}

// ---------------------------------------------------------------------------
// Migration

bool Server::request_migration(std::uint64_t queue, DeviceId target, const std::string& reason) {
  std::lock_guard lk(mu_);
  auto it = queues_.find(queue);
  if (it == queues_.end()) return false;
  return start_migration(it->second, target, reason);
}

bool Server::start_migration(QueueState& q, DeviceId target, const std::string& reason) {
  if (target >= devices_.size() || jobs_.count(q.handle)) return false;
  const auto st = assignment_.state(q.handle);
  if (st.kind != AssignKind::kAssigned || st.device == target) return false;
  assignment_.orphan(q.handle);
  for (auto& ds : devices_) {
    if (ds.active_queue == q.handle) ds.active_queue.reset();
  }
  MigrationJob job;
  job.record.plan = {q.handle, st.device, target, {}};
  job.record.reason = reason;
  job.record.start_ns = clock_.now_ns();
  job.phase = sched::MigrationPhase::kDraining;
  jobs_.emplace(q.handle, std::move(job));
  log(EventKind::kOrphan, q, 0);
  return true;
}

bool Server::advance_migrations() {
  bool progress = false;
  const std::uint64_t now = clock_.now_ns();
  for (auto it = jobs_.begin(); it != jobs_.end();) {
    auto& job = it->second;
    auto& q = queues_.at(it->first);
    auto& plan = job.record.plan;

    if (job.phase == sched::MigrationPhase::kDraining) {
      if (q.inflight) {
        if (!q.inflight->token.done()) {
          ++it;
          continue;
        }
        auto inf = std::move(*q.inflight);
        q.inflight.reset();
        finalize(q, inf.desc, inf.token.status(), inf.busy, inf.token.start_ns(), inf.token.end_ns());
        progress = true;
      }
      job.phase = sched::MigrationPhase::kMoving;
    }

    if (job.phase == sched::MigrationPhase::kMoving) {
      std::vector<LedgerEntry*> manifest;
      bool blocked = false;
      for (std::uint64_t b : ledger_.bound_to(q.handle)) {
        auto* e = ledger_.find(b);
        if (e->residency != Residency::kDeviceResident || e->allocation.device != plan.source) continue;
        if (e->busy > 0) blocked = true;  // pinned by another queue's launch
        manifest.push_back(e);
      }
      if (blocked) {
        ++it;
        continue;
      }
      auto& src = *devices_.at(plan.source).dev;
      auto& dst = *devices_.at(plan.target).dev;
      plan.manifest.clear();
      for (auto* e : manifest) plan.manifest.push_back({e->buffer, e->declared_size});
      job.record.source_used_before = src.used_bytes();

      // Source -> server memory, then free the source copy.
      std::uint64_t cost = 0;
      for (auto* e : manifest) {
        cost += src.transfer_cost_ns(e->declared_size);
        enforce_single_valid_copy(*e);
        e->residency = Residency::kMigrating;
      }
      job.record.source_used_after = src.used_bytes();

      // Server memory -> target.
      bool ok = true;
      for (auto* e : manifest) {
        try {
          const auto a = dst.alloc(e->declared_size);
          dst.sync_to(a, 0, e->staged);
          cost += dst.transfer_cost_ns(e->declared_size);
          e->allocation = a;
          e->residency = Residency::kDeviceResident;
          e->staged.clear();
          e->staged.shrink_to_fit();
        } catch (const Error& err) {
          if (!is_oom(err)) throw;
          ok = false;
          break;
        }
      }
      job.final_device = plan.target;
      if (!ok) {
        // Roll back: everything returns to the source.
        for (auto* e : manifest) {
          enforce_single_valid_copy(*e);
          try {
            const auto a = src.alloc(e->declared_size);
            src.sync_to(a, 0, e->staged);
            e->allocation = a;
            e->residency = Residency::kDeviceResident;
            e->staged.clear();
            e->staged.shrink_to_fit();
          } catch (const Error& err) {
            if (!is_oom(err)) throw;
            e->residency = Residency::kServerStaged;
          }
        }
        job.final_device = plan.source;
        job.record.rolled_back = true;
        stats_.rollbacks += 1;
        log(EventKind::kRollback, q, 0);
      } else {
        stats_.bytes_moved += plan.manifest_bytes();
        log(EventKind::kMove, q, 0);
      }
      stats_.migrations += 1;
      job.ready_ns = vclock_ ? now + cost : now;
      job.phase = sched::MigrationPhase::kFinishing;
      progress = true;
    }

    if (job.phase == sched::MigrationPhase::kFinishing && clock_.now_ns() >= job.ready_ns) {
      q.completed_since_move = 0;
      assign_queue(q, job.final_device);
      job.record.end_ns = clock_.now_ns();
      job.phase = job.record.rolled_back ? sched::MigrationPhase::kRolledBack : sched::MigrationPhase::kDone;
      finished_migrations_.push_back(job.record);
      it = jobs_.erase(it);
      progress = true;
      continue;
    }
    ++it;
  }
  return progress;
}

// ---------------------------------------------------------------------------
// Task execution

void Server::enforce_single_valid_copy(LedgerEntry& e) {
  if (e.residency != Residency::kDeviceResident) return;
  auto& dev = *devices_.at(e.allocation.device).dev;
  e.staged.resize(e.declared_size);
  dev.sync_from(e.allocation, 0, e.staged);
  dev.free(e.allocation);
  e.allocation = {};
  e.residency = Residency::kServerStaged;
}

Server::Residence Server::ensure_resident(QueueState& q, std::uint64_t buffer, DeviceId device,
                                          std::uint64_t& moved_bytes) {
  auto* e = ledger_.find(buffer);
  if (!e) {
    scan_directory(true);
    e = ledger_.find(buffer);
    if (!e) return Residence::kRetry;
  }
  if (e->residency == Residency::kDeviceResident && e->allocation.device == device) {
    if (!e->queue) e->queue = q.handle;
    return Residence::kReady;
  }
  if (e->busy > 0 || e->residency == Residency::kMigrating) return Residence::kRetry;
  if (e->queue && *e->queue != q.handle && jobs_.count(*e->queue)) return Residence::kRetry;

  if (e->residency == Residency::kDeviceResident) moved_bytes += e->declared_size;
  enforce_single_valid_copy(*e);

  auto& dev = *devices_.at(device).dev;
  backends::DeviceBuffer a;
  try {
    a = dev.alloc(e->declared_size);
  } catch (const Error& err) {
    if (!is_oom(err)) throw;
    return Residence::kOOM;
  }
  if (!e->staged.empty()) {
    dev.sync_to(a, 0, e->staged);
    moved_bytes += e->declared_size;
    e->staged.clear();
    e->staged.shrink_to_fit();
  }
  e->allocation = a;
  e->residency = Residency::kDeviceResident;
  e->queue = q.handle;
  return Residence::kReady;
}

void Server::finalize(QueueState& q, TaskDescriptor* desc, std::int32_t status, const std::vector<std::uint64_t>& busy,
                      std::uint64_t start_ns, std::uint64_t end_ns) {
  for (std::uint64_t b : busy) {
    if (auto* e = ledger_.find(b); e && e->busy > 0) e->busy -= 1;
  }
  auto& d = dir();
  for (std::uint32_t i = 0; i < desc->nargs && i < shm::kMaxTaskArgs; ++i) {
    d.buffers[shm::handle_slot(desc->args[i].buffer) % shm::kMaxBuffers].inflight.fetch_sub(1, std::memory_order_acq_rel);
  }
  desc->start_ns = start_ns;
  desc->end_ns = end_ns;
  const std::uint64_t sequence = desc->sequence;
  d.queues[shm::handle_slot(q.handle)].completed.fetch_add(1, std::memory_order_acq_rel);
  if (status == shm::status::kSuccess) {
    stats_.tasks_completed += 1;
  } else {
    stats_.tasks_failed += 1;
  }
  // Last write: the client may reclaim the descriptor as soon as it sees this.
  desc->status.store(status, std::memory_order_release);
  log(EventKind::kComplete, q, sequence, status);
}

void Server::fail_head(QueueState& q, const shm::TaskRecord& rec, std::int32_t status) {
  q.ring.pop();
  auto* desc = arena_.at<TaskDescriptor>(rec.descriptor);
  if (desc->kind == TaskKind::kTransferToDevice && desc->staging != 0) {
    arena_.free(desc->staging);
    desc->staging = 0;
  }
  log(EventKind::kPop, q, rec.sequence);
  const std::uint64_t now = clock_.now_ns();
  finalize(q, desc, status, {}, now, now);
}

bool Server::thread_step(std::uint32_t thread) {
  bool progress = false;
  for (auto& [h, q] : queues_) {
    const auto& st = assignment_.state(h);
    if (st.kind != AssignKind::kAssigned || st.thread != thread) continue;
    progress |= serve_queue_step(thread, q) == Step::kProgress;
  }
  return progress;
}

Server::Step Server::serve_queue_step(std::uint32_t thread, QueueState& q) {
  const auto st = assignment_.state(q.handle);
  if (st.kind != AssignKind::kAssigned || st.thread != thread) return Step::kIdle;
  auto& ds = devices_.at(st.device);
  auto& dev = *ds.dev;
  if (options_.sharing == SharingMode::kTimeSlice && ds.active_queue != q.handle) return Step::kIdle;

  if (q.inflight) {
    if (!q.inflight->token.done()) return Step::kIdle;
    auto inf = std::move(*q.inflight);
    q.inflight.reset();
    finalize(q, inf.desc, inf.token.status(), inf.busy, inf.token.start_ns(), inf.token.end_ns());
    if (options_.force_migrate_every != 0 && devices_.size() > 1 &&
        ++q.completed_since_move >= options_.force_migrate_every) {
      const auto feasible = feasible_devices(q);
      for (std::size_t k = 1; k < devices_.size(); ++k) {
        const auto target = static_cast<DeviceId>((st.device + k) % devices_.size());
        if (feasible[target]) {
          start_migration(q, target, "forced");
          break;
        }
      }
    }
    return Step::kProgress;
  }

  const auto rec = q.ring.peek();
  if (!rec) return Step::kIdle;
  auto* desc = arena_.at<TaskDescriptor>(rec->descriptor);
  const std::uint64_t now = clock_.now_ns();

  std::vector<std::uint64_t> handles;
  for (std::uint32_t i = 0; i < desc->nargs; ++i) handles.push_back(desc->args[i].buffer);

  const KernelImpl* impl = nullptr;
  if (desc->kind == TaskKind::kCompute) {
    const std::string name = kernel_name_of(*desc);
    const auto& dd = dev.descriptor();
    if (dd.supports(name)) impl = dispatch_.lookup(name, dd.type);
    if (!impl) {
      for (std::size_t k = 1; k < devices_.size(); ++k) {
        const auto target = static_cast<DeviceId>((st.device + k) % devices_.size());
        const auto& td = devices_[target].dev->descriptor();
        if (td.supports(name) && dispatch_.lookup(name, td.type)) {
          start_migration(q, target, "kernel");
          return Step::kProgress;
        }
      }
      fail_head(q, *rec, shm::status::kUnknownKernel);
      return Step::kProgress;
    }
  } else if (handles.empty()) {
    fail_head(q, *rec, shm::status::kAborted);
    return Step::kProgress;
  }

  std::uint64_t moved = 0;
  for (std::uint64_t b : handles) {
    switch (ensure_resident(q, b, st.device, moved)) {
      case Residence::kReady: break;
      case Residence::kRetry: return Step::kIdle;
      case Residence::kOOM:
        fail_head(q, *rec, shm::status::kDeviceOOM);
        return Step::kProgress;
    }
  }

  q.ring.pop();
  log(EventKind::kPop, q, rec->sequence);
  ds.last_launch_ns = now;

  Inflight inf;
  inf.record = *rec;
  inf.desc = desc;
  inf.busy = handles;
  for (std::uint64_t b : handles) ledger_.find(b)->busy += 1;

  std::vector<backends::DeviceBuffer> bufs;
  for (std::uint64_t b : handles) bufs.push_back(ledger_.find(b)->allocation);

  switch (desc->kind) {
    case TaskKind::kCompute: {
      std::vector<std::byte> scalars;
      if (desc->scalar_len > 0) {
        const auto* p = arena_.at<std::byte>(desc->scalars);
        scalars.assign(p, p + desc->scalar_len);
      }
      inf.token = dev.launch(q.stream, *impl, std::move(bufs), std::move(scalars), vclock_ ? dev.transfer_cost_ns(moved) : 0);
      break;
    }
    case TaskKind::kTransferToDevice: {
      const auto len = std::min<std::uint64_t>(desc->staging_len, bufs[0].size);
      if (len > 0) dev.sync_to(bufs[0], 0, {arena_.at<const std::byte>(desc->staging), len});
      if (desc->staging != 0) arena_.free(desc->staging);
      desc->staging = 0;
      inf.token = dev.transfer(len + moved);
      break;
    }
    case TaskKind::kTransferFromDevice: {
      const auto len = std::min<std::uint64_t>(desc->staging_len, bufs[0].size);
      if (len > 0) dev.sync_from(bufs[0], 0, {arena_.at<std::byte>(desc->staging), len});
      inf.token = dev.transfer(len + moved);
      break;
    }
  }
  q.inflight = std::move(inf);

  // Copies on a real clock complete on return; reap them right away.
  if (q.inflight->token.done()) {
    auto done = std::move(*q.inflight);
    q.inflight.reset();
    finalize(q, done.desc, done.token.status(), done.busy, done.token.start_ns(), done.token.end_ns());
  }
  return Step::kProgress;
}

void Server::log(EventKind kind, const QueueState& q, std::uint64_t sequence, std::int32_t status) {
  if (!options_.event_log) return;
  ServerEvent ev;
  ev.time_ns = clock_.now_ns();
  ev.kind = kind;
  ev.queue = q.handle;
  ev.sequence = sequence;
  ev.status = status;
  if (assignment_.contains(q.handle)) {
    const auto& st = assignment_.state(q.handle);
    ev.device = st.device;
    ev.thread = st.thread;
  }
  events_.push_back(ev);
}

// ---------------------------------------------------------------------------
// Introspection

SynthesizedDeviceInfo Server::synthesized_device_info() const {
  std::vector<DeviceDescriptor> ds;
  for (const auto& d : devices_) ds.push_back(d.dev->descriptor());
  return server::synthesized_device_info(ds);
}

std::uint64_t Server::device_used_bytes(DeviceId id) const { return devices_.at(id).dev->used_bytes(); }

backends::DeviceStats Server::device_stats(DeviceId id) const { return devices_.at(id).dev->stats(); }

std::vector<backends::LaunchRecord> Server::launch_log(DeviceId id) const { return devices_.at(id).dev->launch_log(); }

void Server::enable_launch_log(bool on) {
  for (auto& d : devices_) d.dev->enable_launch_log(on);
}

std::vector<LedgerRow> Server::ledger_snapshot() {
  std::lock_guard lk(mu_);
  scan_directory(true);
  process_releases();
  return ledger_.rows();
}

LedgerAudit Server::audit_ledger() const {
  std::lock_guard lk(mu_);
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    const auto& dev = *devices_[i].dev;
    const std::uint64_t realized = ledger_.realized_bytes(static_cast<DeviceId>(i));
    if (realized != dev.used_bytes()) {
      return {false, "device " + std::to_string(i) + ": ledger " + std::to_string(realized) + " B vs device " +
                         std::to_string(dev.used_bytes()) + " B"};
    }
    if (realized > dev.descriptor().mem_capacity) return {false, "device " + std::to_string(i) + " over capacity"};
  }
  for (const auto& row : ledger_.rows()) {
    const auto* e = ledger_.find(row.buffer);
    if (e->residency == Residency::kDeviceResident) {
      int holders = 0;
      for (const auto& d : devices_) holders += d.dev->owns(e->allocation) ? 1 : 0;
      if (holders != 1) return {false, "buffer " + std::to_string(row.buffer) + " held by " + std::to_string(holders) + " devices"};
      if (!e->staged.empty()) return {false, "buffer " + std::to_string(row.buffer) + " has a stale host copy"};
    }
  }
  return {};
}

std::vector<ServerEvent> Server::events() const {
  std::lock_guard lk(mu_);
  return events_;
}

std::vector<MigrationRecord> Server::migrations() const {
  std::lock_guard lk(mu_);
  return finished_migrations_;
}

ServerStats Server::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

std::optional<DeviceId> Server::queue_device(std::uint64_t queue) const {
  std::lock_guard lk(mu_);
  if (!assignment_.contains(queue)) return std::nullopt;
  const auto& st = assignment_.state(queue);
  if (st.kind != AssignKind::kAssigned) return std::nullopt;
  return st.device;
}

sched::AssignKind Server::queue_state(std::uint64_t queue) const {
  std::lock_guard lk(mu_);
  if (!assignment_.contains(queue)) return AssignKind::kReleased;
  return assignment_.state(queue).kind;
}

void Server::override_occupancy(const std::string& kernel, double occupancy) {
  std::lock_guard lk(mu_);
  dispatch_.set_occupancy(kernel, occupancy);
}

}  // namespace arax::server
