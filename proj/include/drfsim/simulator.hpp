#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <queue>
#include <string_view>
#include <vector>

#include "drfsim/sim_time.hpp"

namespace drfsim {

enum class EventKind : std::uint8_t {
  kGeneric,
  kFlowStart,
  kSenderTick,
  kProbeTimer,
  kWatchdog,
  kEpochTimer,
  kChannelAttempt,
  kTxEnd,
  kDelivery,
  kRouteReady,
  kSample,
};

std::string_view to_string(EventKind kind);

/// Discrete-event kernel. Events fire in (fire_time, insertion order).
class Simulator {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  /// Queues `action` at absolute time `at`. Scheduling into the past is a
  /// programming error and throws std::logic_error.
  void schedule(SimTime at, EventKind kind, NodeId node, Action action, std::uint64_t detail = 0);

  void schedule_in(SimTime delay, EventKind kind, NodeId node, Action action, std::uint64_t detail = 0) {
    schedule(now_ + delay, kind, node, std::move(action), detail);
  }

  /// Fires every event with fire_time <= end, then leaves the clock at end.
  void run_until(SimTime end);

  std::uint64_t events_scheduled() const { return next_seq_; }
  std::uint64_t events_fired() const { return fired_; }
  std::size_t pending() const { return queue_.size(); }

  /// Event trace, one `tick,event_kind,node_id,detail` line per fired event
  /// plus whatever components add through note().
  void set_trace(std::ostream* out) { trace_ = out; }
  bool tracing() const { return trace_ != nullptr; }
  void note(std::string_view kind, NodeId node, std::string_view detail);

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    EventKind kind;
    NodeId node;
    std::uint64_t detail;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  SimTime now_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t fired_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::ostream* trace_ = nullptr;
};

}  // namespace drfsim
