#include "arax/backends/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "arax/common/error.hpp"
#include "arax/shm/layout.hpp"

namespace arax::backends {

std::string_view to_string(DeviceType type) {
  switch (type) {
    case DeviceType::kCpu:
      return "CPU";
    case DeviceType::kSimGpu:
      return "SIM_GPU";
    case DeviceType::kSimFpga:
      return "SIM_FPGA";
  }
  return "?";
}

DeviceType parse_device_type(std::string_view text) {
  if (text == "CPU" || text == "cpu") return DeviceType::kCpu;
  if (text == "SIM_GPU" || text == "sim_gpu") return DeviceType::kSimGpu;
  if (text == "SIM_FPGA" || text == "sim_fpga") return DeviceType::kSimFpga;
  throw Error(Errc::kConfig, "unknown device type: " + std::string(text));
}

void DeviceDescriptor::validate() const {
  if (streams < 1) throw Error(Errc::kConfig, "device " + name + ": streams must be >= 1");
  if (mem_capacity == 0) throw Error(Errc::kConfig, "device " + name + ": mem_capacity must be > 0");
  if (!(speed_factor >= 0.0)) throw Error(Errc::kConfig, "device " + name + ": speed_factor must be >= 0");
  if (!(bandwidth_gbps > 0.0)) throw Error(Errc::kConfig, "device " + name + ": bandwidth must be > 0");
  if (reload_penalty_ms < 0.0) throw Error(Errc::kConfig, "device " + name + ": negative reload penalty");
}

std::uint64_t simulated_duration_ns(std::uint64_t base_cpu_ns, double speed_factor) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(base_cpu_ns) * (1.0 + speed_factor)));
}

bool CompletionToken::done() const {
  std::lock_guard lk(st_->m);
  return st_->done;
}

void CompletionToken::wait() const {
  std::unique_lock lk(st_->m);
  st_->cv.wait(lk, [&] { return st_->done; });
}

std::int32_t CompletionToken::status() const {
  std::lock_guard lk(st_->m);
  return st_->status;
}

std::uint64_t CompletionToken::start_ns() const {
  std::lock_guard lk(st_->m);
  return st_->start_ns;
}

std::uint64_t CompletionToken::end_ns() const {
  std::lock_guard lk(st_->m);
  return st_->end_ns;
}

Device::Device(DeviceDescriptor desc, const Clock& clock)
    : desc_(std::move(desc)), clock_(clock), virtual_(clock.is_virtual()) {
  desc_.validate();
  stream_busy_.assign(desc_.streams, false);
  last_account_ns_ = clock_.now_ns();
  stats_.last_activity_ns = last_account_ns_;
  if (!virtual_) {
    stream_queues_.resize(desc_.streams);
    for (std::uint32_t s = 0; s < desc_.streams; ++s) workers_.emplace_back([this, s] { stream_worker(s); });
  }
}

Device::~Device() {
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& w : workers_) w.join();
  for (auto& q : stream_queues_) {
    for (auto& p : q) complete(p.token, shm::status::kAborted, 0, 0);
  }
  for (auto& p : pending_) complete(p.token, shm::status::kAborted, 0, 0);
}

DeviceBuffer Device::alloc(std::uint64_t size) {
  if (size == 0) throw Error(Errc::kInvalidArgument, "zero-sized device allocation");
  std::lock_guard lk(mem_mu_);
  if (size > desc_.mem_capacity - used_) throw Error(Errc::kDeviceOOM, "device out of memory: " + desc_.name);
  void* p = std::calloc(size, 1);
  if (p == nullptr) throw Error(Errc::kDeviceOOM, "host allocation backing " + desc_.name + " failed");
  Storage s;
  s.data = std::unique_ptr<std::byte, void (*)(void*)>(static_cast<std::byte*>(p), std::free);
  s.size = size;
  const std::uint64_t id = next_buffer_id_++;
  storage_.emplace(id, std::move(s));
  used_ += size;
  return DeviceBuffer{desc_.id, id, size};
}

void Device::free(const DeviceBuffer& buf) {
  if (buf.device != desc_.id) throw Error(Errc::kCrossDevice, "buffer belongs to another device");
  std::lock_guard lk(mem_mu_);
  auto it = storage_.find(buf.id);
  if (it == storage_.end()) throw Error(Errc::kDoubleFree, "double free");
  used_ -= it->second.size;
  storage_.erase(it);
}

std::uint64_t Device::used_bytes() const {
  std::lock_guard lk(mem_mu_);
  return used_;
}

bool Device::owns(const DeviceBuffer& buf) const {
  if (buf.device != desc_.id) return false;
  std::lock_guard lk(mem_mu_);
  return storage_.count(buf.id) != 0;
}

Device::Storage& Device::storage_for(const DeviceBuffer& buf) {
  if (buf.device != desc_.id) throw Error(Errc::kCrossDevice, "buffer belongs to another device");
  std::lock_guard lk(mem_mu_);
  auto it = storage_.find(buf.id);
  if (it == storage_.end()) throw Error(Errc::kInvalidHandle, "unknown device buffer");
  return it->second;
}

std::span<std::byte> Device::bytes(const DeviceBuffer& buf) {
  Storage& s = storage_for(buf);
  return {s.data.get(), s.size};
}

namespace {
void check_range(std::uint64_t offset, std::uint64_t len, std::uint64_t size) {
  if (offset > size || len > size - offset) throw Error(Errc::kOutOfBounds, "range out of bounds");
}
}  // namespace

void Device::sync_to(const DeviceBuffer& dst, std::uint64_t offset, std::span<const std::byte> src) {
  Storage& s = storage_for(dst);
  check_range(offset, src.size(), s.size);
  if (!src.empty()) std::memcpy(s.data.get() + offset, src.data(), src.size());
}

void Device::sync_from(const DeviceBuffer& src, std::uint64_t offset, std::span<std::byte> dst) {
  Storage& s = storage_for(src);
  check_range(offset, dst.size(), s.size);
  if (!dst.empty()) std::memcpy(dst.data(), s.data.get() + offset, dst.size());
}

void Device::devcpy(const DeviceBuffer& dst, std::uint64_t dst_offset, const DeviceBuffer& src,
                    std::uint64_t src_offset, std::uint64_t len) {
  if (dst.device != desc_.id || src.device != desc_.id) {
    throw Error(Errc::kCrossDevice, "devcpy across devices is not supported");
  }
  Storage& d = storage_for(dst);
  Storage& s = storage_for(src);
  check_range(dst_offset, len, d.size);
  check_range(src_offset, len, s.size);
  if (len != 0) std::memmove(d.data.get() + dst_offset, s.data.get() + src_offset, len);
}

void Device::memset(const DeviceBuffer& dst, std::uint64_t offset, std::uint8_t value, std::uint64_t len) {
  Storage& s = storage_for(dst);
  check_range(offset, len, s.size);
  if (len != 0) std::memset(s.data.get() + offset, value, len);
}

std::uint64_t Device::transfer_cost_ns(std::uint64_t bytes) const {
  return static_cast<std::uint64_t>(std::ceil(static_cast<double>(bytes) / desc_.bandwidth_gbps));
}

void Device::complete(const std::shared_ptr<detail::CompletionState>& token, std::int32_t status,
                      std::uint64_t start, std::uint64_t end) {
  {
    std::lock_guard lk(token->m);
    token->status = status;
    token->start_ns = start;
    token->end_ns = end;
    token->done = true;
  }
  token->cv.notify_all();
}

std::uint64_t Device::reload_cost(const KernelImpl& kernel) {
  if (desc_.type != DeviceType::kSimFpga || desc_.reload_penalty_ms <= 0.0) return 0;
  if (loaded_kernel_ == kernel.name) return 0;
  loaded_kernel_ = kernel.name;
  const auto ns = static_cast<std::uint64_t>(std::llround(desc_.reload_penalty_ms * static_cast<double>(kNsPerMs)));
  stats_.reloads += 1;
  stats_.reload_ns += ns;
  return ns;
}

bool Device::occupancy_fits(const KernelImpl& kernel) const {
  if (occupancy_used_ + kernel.occupancy > 1.0 + 1e-9) return false;
  // A single-kernel bitstream cannot be swapped while anything runs on it.
  if (desc_.type == DeviceType::kSimFpga && desc_.reload_penalty_ms > 0.0 && loaded_kernel_ != kernel.name &&
      running_count_ > 0) {
    return false;
  }
  return true;
}

std::int32_t Device::run_kernel(const KernelImpl& kernel, const std::vector<DeviceBuffer>& args,
                                std::span<const std::byte> scalars) {
  try {
    std::vector<std::span<std::byte>> spans;
    spans.reserve(args.size());
    for (const auto& a : args) spans.push_back(bytes(a));
    kernel.fn(KernelArgs{spans, scalars});
    return shm::status::kSuccess;
  } catch (const std::exception&) {
    return shm::status::kAborted;
  }
}

void Device::account_busy(std::uint64_t now) {
  if (now > last_account_ns_) {
    if (was_active_) stats_.busy_ns += now - last_account_ns_;
    last_account_ns_ = now;
  }
}

CompletionToken Device::launch(std::uint32_t stream, const KernelImpl& kernel, std::vector<DeviceBuffer> args,
                               std::vector<std::byte> scalars, std::uint64_t pre_delay_ns) {
  if (stream >= desc_.streams) throw Error(Errc::kInvalidArgument, "stream index out of range");
  if (!desc_.supports(kernel.name)) {
    throw Error(Errc::kKernelUnsupported, "kernel " + kernel.name + " is not supported by " + desc_.name);
  }
  auto token = std::make_shared<detail::CompletionState>();
  {
    std::lock_guard lk(mu_);
    const std::uint64_t now = clock_.now_ns();
    account_busy(now);
    Pending p{next_seq_++, stream, &kernel, std::move(args), std::move(scalars), token, now + pre_delay_ns};
    stats_.launches += 1;
    stats_.last_activity_ns = now;
    if (virtual_) {
      pending_.push_back(std::move(p));
      try_start_virtual(now);
    } else {
      stream_queues_[stream].push_back(std::move(p));
    }
  }
  if (!virtual_) cv_.notify_all();
  return CompletionToken(token);
}

CompletionToken Device::transfer(std::uint64_t bytes) {
  auto token = std::make_shared<detail::CompletionState>();
  std::lock_guard lk(mu_);
  const std::uint64_t now = clock_.now_ns();
  account_busy(now);
  stats_.last_activity_ns = now;
  if (!virtual_) {
    complete(token, shm::status::kSuccess, now, now);
    return CompletionToken(token);
  }
  const std::uint64_t start = std::max(now, copy_free_ns_);
  const std::uint64_t end = start + transfer_cost_ns(bytes);
  copy_free_ns_ = end;
  {
    std::lock_guard tl(token->m);
    token->start_ns = start;
  }
  copies_.push_back(Copy{end, token});
  was_active_ = true;
  return CompletionToken(token);
}

void Device::try_start_virtual(std::uint64_t now) {
  std::vector<bool> blocked = stream_busy_;
  for (auto it = pending_.begin(); it != pending_.end();) {
    Pending& p = *it;
    if (blocked[p.stream]) {
      ++it;
      continue;
    }
    if (p.ready_ns > now) {
      blocked[p.stream] = true;
      ++it;
      continue;
    }
    if (!occupancy_fits(*p.kernel)) break;

    const std::uint64_t reload = reload_cost(*p.kernel);
    const std::int32_t status = run_kernel(*p.kernel, p.args, p.scalars);
    std::vector<std::uint64_t> sizes;
    sizes.reserve(p.args.size());
    for (const auto& a : p.args) sizes.push_back(a.size);
    const std::uint64_t base = p.kernel->cost(sizes, p.scalars);
    const std::uint64_t end = now + simulated_duration_ns(base, desc_.speed_factor) + reload;

    occupancy_used_ += p.kernel->occupancy;
    stats_.peak_occupancy = std::max(stats_.peak_occupancy, occupancy_used_);
    running_count_ += 1;
    stream_busy_[p.stream] = true;
    blocked[p.stream] = true;
    {
      std::lock_guard tl(p.token->m);
      p.token->status = status;
    }
    std::size_t log_index = SIZE_MAX;
    if (log_enabled_) {
      log_index = log_.size();
      log_.push_back(LaunchRecord{p.seq, p.stream, p.kernel->name, p.kernel->occupancy, now, end, reload});
    }
    running_.push_back(Running{p.seq, p.stream, p.kernel->occupancy, end, p.token, log_index});
    was_active_ = true;
    // Keep the start time on the token; end is filled at completion.
    {
      std::lock_guard tl(p.token->m);
      p.token->start_ns = now;
    }
    it = pending_.erase(it);
  }
}

std::optional<std::uint64_t> Device::next_event_ns() const {
  std::lock_guard lk(mu_);
  std::optional<std::uint64_t> best;
  auto consider = [&](std::uint64_t t) {
    if (!best || t < *best) best = t;
  };
  for (const auto& r : running_) consider(r.end_ns);
  if (!copies_.empty()) consider(copies_.front().end_ns);
  const std::uint64_t now = clock_.now_ns();
  for (const auto& p : pending_) {
    if (p.ready_ns > now) consider(p.ready_ns);
  }
  return best;
}

bool Device::advance() {
  std::lock_guard lk(mu_);
  if (!virtual_) return false;
  const std::uint64_t now = clock_.now_ns();
  account_busy(now);
  bool progress = false;

  std::vector<Running> due;
  for (auto it = running_.begin(); it != running_.end();) {
    if (it->end_ns <= now) {
      due.push_back(std::move(*it));
      it = running_.erase(it);
    } else {
      ++it;
    }
  }
  std::sort(due.begin(), due.end(), [](const Running& a, const Running& b) {
    return a.end_ns != b.end_ns ? a.end_ns < b.end_ns : a.seq < b.seq;
  });
  for (auto& r : due) {
    occupancy_used_ -= r.occupancy;
    if (occupancy_used_ < 1e-12) occupancy_used_ = 0;
    running_count_ -= 1;
    stream_busy_[r.stream] = false;
    std::int32_t status;
    std::uint64_t start;
    {
      std::lock_guard tl(r.token->m);
      status = r.token->status;
      start = r.token->start_ns;
    }
    complete(r.token, status, start, r.end_ns);
    progress = true;
  }
  while (!copies_.empty() && copies_.front().end_ns <= now) {
    std::uint64_t start;
    {
      std::lock_guard tl(copies_.front().token->m);
      start = copies_.front().token->start_ns;
    }
    complete(copies_.front().token, shm::status::kSuccess, start, copies_.front().end_ns);
    copies_.pop_front();
    progress = true;
  }
  const std::size_t before = pending_.size();
  try_start_virtual(now);
  if (pending_.size() != before) progress = true;
  was_active_ = running_count_ > 0 || copy_free_ns_ > now;
  return progress;
}

void Device::stream_worker(std::uint32_t stream) {
  for (;;) {
    Pending p;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return stopping_ || !stream_queues_[stream].empty(); });
      if (stream_queues_[stream].empty()) return;
      p = std::move(stream_queues_[stream].front());
      stream_queues_[stream].pop_front();
    }
    const std::uint64_t now0 = clock_.now_ns();
    if (p.ready_ns > now0) std::this_thread::sleep_for(std::chrono::nanoseconds(p.ready_ns - now0));

    std::uint64_t reload = 0;
    std::uint64_t start = 0;
    std::size_t log_index = SIZE_MAX;
    {
      std::unique_lock lk(mu_);
      gate_waiters_.insert(p.seq);
      cv_.wait(lk, [&] { return stopping_ || (*gate_waiters_.begin() == p.seq && occupancy_fits(*p.kernel)); });
      gate_waiters_.erase(p.seq);
      if (stopping_) {
        lk.unlock();
        complete(p.token, shm::status::kAborted, 0, 0);
        continue;
      }
      start = clock_.now_ns();
      account_busy(start);
      occupancy_used_ += p.kernel->occupancy;
      stats_.peak_occupancy = std::max(stats_.peak_occupancy, occupancy_used_);
      running_count_ += 1;
      was_active_ = true;
      reload = reload_cost(*p.kernel);
      if (log_enabled_) {
        log_index = log_.size();
        log_.push_back(LaunchRecord{p.seq, stream, p.kernel->name, p.kernel->occupancy, start, 0, reload});
      }
    }
    cv_.notify_all();

    const std::uint64_t t0 = clock_.now_ns();
    const std::int32_t status = run_kernel(*p.kernel, p.args, p.scalars);
    const std::uint64_t measured = clock_.now_ns() - t0;
    const std::uint64_t surcharge = simulated_duration_ns(measured, desc_.speed_factor) - measured + reload;
    if (surcharge > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(surcharge));

    std::uint64_t end = 0;
    {
      std::lock_guard lk(mu_);
      end = clock_.now_ns();
      account_busy(end);
      occupancy_used_ -= p.kernel->occupancy;
      if (occupancy_used_ < 1e-12) occupancy_used_ = 0;
      running_count_ -= 1;
      was_active_ = running_count_ > 0;
      if (log_index != SIZE_MAX) log_[log_index].end_ns = end;
    }
    cv_.notify_all();
    complete(p.token, status, start, end);
  }
}

DeviceStats Device::stats() const {
  DeviceStats s;
  {
    std::lock_guard lk(mu_);
    s = stats_;
    const std::uint64_t now = clock_.now_ns();
    if (was_active_ && now > last_account_ns_) s.busy_ns += now - last_account_ns_;
  }
  s.used_bytes = used_bytes();
  return s;
}

void Device::enable_launch_log(bool on) {
  std::lock_guard lk(mu_);
  log_enabled_ = on;
}

std::vector<LaunchRecord> Device::launch_log() const {
  std::lock_guard lk(mu_);
  return log_;
}

}  // namespace arax::backends
