#include "drfsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drfsim {

std::string_view to_string(PacketKind kind) {
  switch (kind) {
    case PacketKind::kData: return "DATA";
    case PacketKind::kProbe: return "PROBE";
    case PacketKind::kAckRate: return "ACK_RATE";
    case PacketKind::kElfn: return "ELFN";
    case PacketKind::kRouteControl: return "ROUTE_CTRL";
  }
  return "UNKNOWN";
}

void RadioParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(tx_range, "tx_range");
  positive(interference_range, "interference_range");
  positive(bitrate, "bitrate");
  positive(tx_power, "tx_power");
  positive(rx_power, "rx_power");
  if (prop_delay.ticks() <= 0) throw std::invalid_argument("prop_delay must be positive");
  if (tx_range > interference_range) throw std::invalid_argument("tx_range must not exceed interference_range");
}

SimTime tx_duration(std::uint32_t bytes, double bitrate) {
  if (bytes == 0) throw std::invalid_argument("tx_duration: zero-size packet");
  if (!(bitrate > 0.0)) throw std::invalid_argument("tx_duration: bitrate must be positive");
  const double bits = 8.0 * bytes;
  // Integral bitrates divide exactly in integer arithmetic.
  if (bitrate == std::floor(bitrate) && bitrate < 9.0e15) {
    const auto rate = static_cast<std::int64_t>(bitrate);
    const std::int64_t num = static_cast<std::int64_t>(bits) * SimTime::kTicksPerSecond;
    return SimTime::from_ticks((num + rate - 1) / rate);
  }
  return SimTime::from_ticks(static_cast<std::int64_t>(std::ceil(bits / bitrate * SimTime::kTicksPerSecond)));
}

bool can_receive(Position a, Position b, const RadioParams& radio) { return distance(a, b) <= radio.tx_range; }

void EnergyLedger::charge_tx(PacketKind kind, SimTime airtime, const RadioParams& radio) {
  e_tx += radio.tx_power * airtime.seconds();
  tx_ticks[static_cast<std::size_t>(kind)] += airtime.ticks();
}

void EnergyLedger::charge_rx(PacketKind kind, SimTime airtime, const RadioParams& radio) {
  e_rx += radio.rx_power * airtime.seconds();
  rx_ticks[static_cast<std::size_t>(kind)] += airtime.ticks();
}

Channel::Channel(Simulator& sim, MobilityModel& mobility, RadioParams radio, std::size_t queue_capacity,
                 std::uint64_t seed, double injected_loss)
    : sim_(sim),
      mobility_(mobility),
      radio_(radio),
      capacity_(queue_capacity),
      jitter_(seed, "jitter"),
      loss_(seed, "loss"),
      injected_loss_(injected_loss),
      macs_(mobility.size()),
      ledgers_(mobility.size()),
      cache_(mobility.size()),
      cache_valid_(mobility.size(), 0) {
  radio_.validate();
  if (capacity_ == 0) throw std::invalid_argument("queue capacity must be positive");
}

Position Channel::pos(NodeId node) {
  if (cache_time_ != sim_.now()) {
    cache_time_ = sim_.now();
    std::fill(cache_valid_.begin(), cache_valid_.end(), 0);
  }
  if (!cache_valid_[node]) {
    cache_[node] = mobility_.position(node, cache_time_);
    cache_valid_[node] = 1;
  }
  return cache_[node];
}

bool Channel::busy(NodeId node) {
  if (active_.empty()) return false;
  const Position p = pos(node);
  for (const Active& a : active_) {
    if (a.node != node && distance(a.pos, p) <= radio_.interference_range) return true;
  }
  return false;
}

bool Channel::contender_nearby(NodeId node) {
  if (contenders_.empty()) return false;
  const Position p = pos(node);
  for (NodeId c : contenders_) {
    if (c != node && distance(pos(c), p) <= radio_.interference_range) return true;
  }
  return false;
}

void Channel::remove_contender(NodeId node) {
  auto it = std::find(contenders_.begin(), contenders_.end(), node);
  if (it != contenders_.end()) contenders_.erase(it);
}

bool Channel::enqueue(NodeId node, Packet&& pkt, NodeId next_hop) {
  NodeMac& mac = macs_[node];
  if (mac.queue.size() >= capacity_) {
    ++queue_drops_;
    return false;
  }
  mac.queue.push_back(Frame{std::move(pkt), next_hop, sim_.now()});
  if (mac.state == MacState::kIdle) request(node);
  return true;
}

std::vector<Packet> Channel::purge(NodeId node, NodeId next_hop) {
  NodeMac& mac = macs_[node];
  std::vector<Packet> removed;
  // The head frame may be contending; it is removed like the rest and the
  // node goes back to idle if nothing remains.
  const bool head_removed = !mac.queue.empty() && mac.queue.front().next_hop == next_hop;
  std::deque<Frame> keep;
  for (Frame& f : mac.queue) {
    if (f.next_hop == next_hop) {
      removed.push_back(std::move(f.pkt));
    } else {
      keep.push_back(std::move(f));
    }
  }
  mac.queue = std::move(keep);
  if (mac.state == MacState::kWaiting || mac.state == MacState::kAttempting) {
    if (mac.queue.empty()) {
      ++mac.attempt_token;
      mac.state = MacState::kIdle;
      remove_contender(node);
    } else if (head_removed) {
      mac.head_since = sim_.now();
    }
  }
  return removed;
}

void Channel::request(NodeId node) {
  NodeMac& mac = macs_[node];
  mac.head_since = sim_.now();
  if (!busy(node) && !contender_nearby(node)) {
    grant(node);
    return;
  }
  contenders_.push_back(node);
  if (!busy(node)) {
    schedule_attempt(node);
  } else {
    mac.state = MacState::kWaiting;
  }
}

void Channel::schedule_attempt(NodeId node) {
  NodeMac& mac = macs_[node];
  mac.state = MacState::kAttempting;
  const std::uint64_t token = ++mac.attempt_token;
  const SimTime jitter = SimTime::from_ticks(static_cast<std::int64_t>(jitter_.below(kJitterSlot.ticks())));
  sim_.schedule_in(jitter, EventKind::kChannelAttempt, node, [this, node, token] { attempt(node, token); });
}

void Channel::attempt(NodeId node, std::uint64_t token) {
  NodeMac& mac = macs_[node];
  if (token != mac.attempt_token || mac.state != MacState::kAttempting) return;
  if (busy(node)) {
    mac.state = MacState::kWaiting;
    return;
  }
  grant(node);
}

void Channel::grant(NodeId node) {
  NodeMac& mac = macs_[node];
  remove_contender(node);
  ++mac.attempt_token;
  mac.state = MacState::kTransmitting;

  Frame frame = std::move(mac.queue.front());
  mac.queue.pop_front();
  const SimTime now = sim_.now();
  const SimTime queue_delay = mac.head_since - frame.enqueued_at;
  const SimTime contention_delay = now - mac.head_since;
  if (handlers_.on_grant) handlers_.on_grant(node, frame.pkt, queue_delay, contention_delay);

  const SimTime airtime = tx_duration(frame.pkt.size, radio_.bitrate);
  ledgers_[node].charge_tx(frame.pkt.kind, airtime, radio_);
  active_.push_back(Active{node, pos(node)});
  if (frame.pkt.kind == PacketKind::kData) ++data_on_air_[frame.pkt.flow];

  log_.push_back(TxRecord{now, now + airtime, node, frame.next_hop, frame.pkt.kind, frame.pkt.flow, frame.pkt.seq,
                          frame.pkt.size, queue_delay, contention_delay, TxOutcome::kOnAir});
  const std::size_t record = log_.size() - 1;

  sim_.schedule(now + airtime, EventKind::kTxEnd, node, [this, node] { tx_end(node); });
  const NodeId dst = frame.next_hop;
  sim_.schedule(now + airtime + radio_.prop_delay, EventKind::kDelivery, dst,
                [this, record, node, dst, pkt = std::move(frame.pkt)]() mutable {
                  deliver(record, node, dst, std::move(pkt));
                });
}

void Channel::tx_end(NodeId node) {
  auto it = std::find_if(active_.begin(), active_.end(), [node](const Active& a) { return a.node == node; });
  if (it != active_.end()) active_.erase(it);
  NodeMac& mac = macs_[node];
  mac.state = MacState::kIdle;

  for (NodeId c : contenders_) {
    if (macs_[c].state == MacState::kWaiting && !busy(c)) schedule_attempt(c);
  }
  if (!mac.queue.empty()) request(node);
}

void Channel::deliver(std::size_t record, NodeId src, NodeId dst, Packet pkt) {
  TxRecord& rec = log_[record];
  if (pkt.kind == PacketKind::kData) --data_on_air_[pkt.flow];
  if (!can_receive(pos(src), pos(dst), radio_)) {
    rec.outcome = TxOutcome::kLinkBreak;
    if (handlers_.on_link_break) handlers_.on_link_break(src, dst, std::move(pkt));
    return;
  }
  if (injected_loss_ > 0.0 && loss_.bernoulli(injected_loss_)) {
    rec.outcome = TxOutcome::kInjectedLoss;
    if (handlers_.on_lost) handlers_.on_lost(src, dst, std::move(pkt));
    return;
  }
  rec.outcome = TxOutcome::kDelivered;
  ledgers_[dst].charge_rx(rec.kind, rec.end - rec.start, radio_);
  if (handlers_.on_receive) handlers_.on_receive(dst, std::move(pkt));
}

void Channel::charge_virtual(NodeId from, NodeId to, PacketKind kind, std::uint32_t bytes) {
  const SimTime airtime = tx_duration(bytes, radio_.bitrate);
  ledgers_[from].charge_tx(kind, airtime, radio_);
  ledgers_[to].charge_rx(kind, airtime, radio_);
  const SimTime now = sim_.now();
  log_.push_back(TxRecord{now, now + airtime, from, to, kind, 0, 0, bytes, SimTime{}, SimTime{}, TxOutcome::kVirtual});
}

std::size_t Channel::data_frames_held(FlowId flow) const {
  auto it = data_on_air_.find(flow);
  std::size_t n = it == data_on_air_.end() ? 0 : it->second;
  for (const NodeMac& mac : macs_) {
    for (const Frame& f : mac.queue) n += f.pkt.kind == PacketKind::kData && f.pkt.flow == flow;
  }
  return n;
}

}  // namespace drfsim
