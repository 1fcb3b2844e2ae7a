#include "drfsim/simulator.hpp"

#include <stdexcept>
#include <string>

namespace drfsim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kGeneric: return "generic";
    case EventKind::kFlowStart: return "flow_start";
    case EventKind::kSenderTick: return "sender_tick";
    case EventKind::kProbeTimer: return "probe_timer";
    case EventKind::kWatchdog: return "watchdog";
    case EventKind::kEpochTimer: return "epoch_timer";
    case EventKind::kChannelAttempt: return "channel_attempt";
    case EventKind::kTxEnd: return "tx_end";
    case EventKind::kDelivery: return "delivery";
    case EventKind::kRouteReady: return "route_ready";
    case EventKind::kSample: return "sample";
  }
  return "unknown";
}

void Simulator::schedule(SimTime at, EventKind kind, NodeId node, Action action, std::uint64_t detail) {
  if (at < now_) {
    throw std::logic_error("Simulator::schedule: event at tick " + std::to_string(at.ticks()) +
                           " is before the current tick " + std::to_string(now_.ticks()));
  }
  queue_.push(Event{at, next_seq_++, kind, node, detail, std::move(action)});
}

void Simulator::run_until(SimTime end) {
  while (!queue_.empty() && queue_.top().at <= end) {
    // priority_queue::top() is const; the action has to be moved out.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ = ev.at;
    ++fired_;
    if (trace_) {
      *trace_ << ev.at.ticks() << ',' << to_string(ev.kind) << ',' << ev.node << ',' << ev.detail << '\n';
    }
    ev.action();
  }
  if (end > now_) now_ = end;
}

void Simulator::note(std::string_view kind, NodeId node, std::string_view detail) {
  if (!trace_) return;
  *trace_ << now_.ticks() << ',' << kind << ',' << node << ',' << detail << '\n';
}

}  // namespace drfsim
