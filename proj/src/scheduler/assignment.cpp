#include "arax/scheduler/assignment.hpp"

#include <string>

#include "arax/common/error.hpp"

namespace arax::sched {

std::string_view to_string(AssignKind kind) {
  switch (kind) {
    case AssignKind::kUnassigned: return "unassigned";
    case AssignKind::kAssigned: return "assigned";
    case AssignKind::kOrphan: return "orphan";
    case AssignKind::kReleased: return "released";
  }
  return "?";
}

std::string_view to_string(MigrationPhase phase) {
  switch (phase) {
    case MigrationPhase::kOrphaned: return "orphaned";
    case MigrationPhase::kDraining: return "draining";
    case MigrationPhase::kMoving: return "moving";
    case MigrationPhase::kFinishing: return "finishing";
    case MigrationPhase::kDone: return "done";
    case MigrationPhase::kRolledBack: return "rolled-back";
  }
  return "?";
}

namespace {

[[noreturn]] void bad_transition(QueueId q, AssignKind from, std::string_view to) {
  throw Error(Errc::kInvalidArgument, "queue " + std::to_string(q) + ": illegal transition " +
                                          std::string(to_string(from)) + " -> " + std::string(to));
}

}  // namespace

void Assignment::add(QueueId q) {
  if (!states_.emplace(q, AssignState{}).second) {
    throw Error(Errc::kInvalidArgument, "queue " + std::to_string(q) + " already tracked");
  }
}

void Assignment::assign(QueueId q, DeviceId device, std::uint32_t thread) {
  auto& s = states_.at(q);
  if (s.kind != AssignKind::kUnassigned && s.kind != AssignKind::kOrphan) bad_transition(q, s.kind, "assigned");
  s = {AssignKind::kAssigned, device, thread};
}

void Assignment::orphan(QueueId q) {
  auto& s = states_.at(q);
  if (s.kind != AssignKind::kAssigned) bad_transition(q, s.kind, "orphan");
  s.kind = AssignKind::kOrphan;
}

void Assignment::release(QueueId q) {
  auto& s = states_.at(q);
  if (s.kind == AssignKind::kReleased || s.kind == AssignKind::kOrphan) bad_transition(q, s.kind, "released");
  s.kind = AssignKind::kReleased;
}

void Assignment::forget(QueueId q) { states_.erase(q); }

const AssignState& Assignment::state(QueueId q) const {
  auto it = states_.find(q);
  if (it == states_.end()) throw Error(Errc::kInvalidHandle, "queue " + std::to_string(q) + " not tracked");
  return it->second;
}

std::vector<QueueId> Assignment::queues_on(DeviceId device) const {
  std::vector<QueueId> out;
  for (const auto& [q, s] : states_) {
    if ((s.kind == AssignKind::kAssigned || s.kind == AssignKind::kOrphan) && s.device == device) out.push_back(q);
  }
  return out;
}

std::optional<DeviceId> RoundRobinSelector::select(const std::vector<bool>& feasible) {
  if (count_ == 0) return std::nullopt;
  for (std::size_t i = 0; i < count_; ++i) {
    const std::size_t d = (next_ + i) % count_;
    if (d < feasible.size() && feasible[d]) {
      next_ = (d + 1) % count_;
      return static_cast<DeviceId>(d);
    }
  }
  return std::nullopt;
}

}  // namespace arax::sched
