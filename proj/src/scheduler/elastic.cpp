#include "arax/scheduler/elastic.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace arax::sched {

namespace {

using shm::Priority;

bool is_low(const QueueView& q) { return q.priority == Priority::kLow && q.device.has_value(); }

// Queues that must travel with `q`: itself plus its buffer-sharing group on
// the same device.
std::vector<const QueueView*> unit_of(const ClusterView& view, const QueueView& q) {
  std::vector<const QueueView*> out;
  for (const auto& other : view.queues) {
    if (&other == &q || (q.group != 0 && other.group == q.group && other.device == q.device)) out.push_back(&other);
  }
  return out;
}

std::size_t load_of(const ClusterView& view, DeviceId d) {
  return static_cast<std::size_t>(
      std::count_if(view.queues.begin(), view.queues.end(), [&](const QueueView& q) { return q.device == d; }));
}

}  // namespace

std::optional<DeviceId> device_to_free(const ClusterView& view) {
  if (view.devices.size() < 2) return std::nullopt;
  for (const auto& d : view.devices) {
    if (d.reserved_for_high) return std::nullopt;
  }
  const QueueView* latest = nullptr;
  for (const auto& q : view.queues) {
    if (is_low(q) && q.expanded_order != 0 && (!latest || q.expanded_order > latest->expanded_order)) latest = &q;
  }
  if (latest) return latest->device;

  std::optional<DeviceId> best;
  std::size_t best_low = 0;
  for (const auto& d : view.devices) {
    const auto low = static_cast<std::size_t>(std::count_if(
        view.queues.begin(), view.queues.end(), [&](const QueueView& q) { return is_low(q) && q.device == d.id; }));
    if (!best || low <= best_low) {
      best = d.id;
      best_low = low;
    }
  }
  return best;
}

std::vector<MigrationPlan> elastic_rebalance(ElasticEvent event, const ClusterView& view) {
  std::vector<MigrationPlan> plans;
  if (view.devices.size() < 2) return plans;

  switch (event) {
    case ElasticEvent::kHighPriorityDeparture:
      return plans;

    case ElasticEvent::kIdleDeviceDetected: {
      std::set<QueueId> moved;
      std::map<DeviceId, std::size_t> planned_in;
      for (const auto& dev : view.devices) {
        if (!dev.idle || dev.reserved_for_high) continue;
        const bool busy = std::any_of(view.queues.begin(), view.queues.end(),
                                      [&](const QueueView& q) { return q.has_work && q.device == dev.id; });
        if (busy || planned_in[dev.id] != 0) continue;
        // Candidate: a low-priority session with >= 2 working units packed on
        // one device. Take the session's highest-numbered such queue.
        const QueueView* pick = nullptr;
        for (const auto& q : view.queues) {
          if (!is_low(q) || !q.has_work || moved.count(q.queue) || *q.device == dev.id) continue;
          std::set<std::uint64_t> units;
          for (const auto& o : view.queues) {
            if (is_low(o) && o.has_work && !moved.count(o.queue) && o.session == q.session && o.device == q.device) {
              units.insert(o.group != 0 ? (o.group | (1ull << 63)) : o.queue);
            }
          }
          if (units.size() < 2) continue;
          if (!pick || q.session < pick->session || (q.session == pick->session && q.queue > pick->queue)) pick = &q;
        }
        if (!pick) continue;
        for (const QueueView* m : unit_of(view, *pick)) {
          plans.push_back({m->queue, *m->device, dev.id, {}});
          moved.insert(m->queue);
        }
        ++planned_in[dev.id];
      }
      return plans;
    }

    case ElasticEvent::kHighPriorityArrival: {
      const auto victim = device_to_free(view);
      if (!victim) return plans;
      std::vector<const QueueView*> evict;
      for (const auto& q : view.queues) {
        if (is_low(q) && *q.device == *victim) evict.push_back(&q);
      }
      std::stable_sort(evict.begin(), evict.end(),
                       [](const QueueView* a, const QueueView* b) { return a->expanded_order > b->expanded_order; });
      std::map<DeviceId, std::size_t> extra;
      for (const QueueView* q : evict) {
        std::optional<DeviceId> target;
        for (const auto& o : view.queues) {
          if (o.session == q->session && o.device && *o.device != *victim) {
            target = o.device;
            break;
          }
        }
        if (!target) {
          std::size_t best = 0;
          for (const auto& d : view.devices) {
            if (d.id == *victim) continue;
            const std::size_t load = load_of(view, d.id) + extra[d.id];
            if (!target || load < best) {
              target = d.id;
              best = load;
            }
          }
        }
        plans.push_back({q->queue, *victim, *target, {}});
        ++extra[*target];
      }
      return plans;
    }
  }
  return plans;
}

}  // namespace arax::sched
