#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "drfsim/mobility.hpp"
#include "drfsim/packet.hpp"
#include "drfsim/rng.hpp"
#include "drfsim/simulator.hpp"

namespace drfsim {

struct RadioParams {
  double tx_range = 200.0;            // m
  double interference_range = 500.0;  // m
  double bitrate = 2'000'000.0;       // bit/s
  SimTime prop_delay = SimTime::from_ticks(25);  // 2.5 us
  double tx_power = 0.660;            // W
  double rx_power = 0.395;            // W

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Airtime of a `bytes`-sized frame, rounded up to a whole tick.
/// Zero-size frames are a fault (std::invalid_argument).
SimTime tx_duration(std::uint32_t bytes, double bitrate);

/// Inclusive range test: distance <= tx_range.
bool can_receive(Position a, Position b, const RadioParams& radio);

/// Per-node transmit/receive energy. Joule totals are accumulated directly;
/// the per-kind airtime counters let callers split the total by packet kind.
struct EnergyLedger {
  double e_tx = 0.0;
  double e_rx = 0.0;
  std::array<std::int64_t, kPacketKindCount> tx_ticks{};
  std::array<std::int64_t, kPacketKindCount> rx_ticks{};

  double total() const { return e_tx + e_rx; }
  void charge_tx(PacketKind kind, SimTime airtime, const RadioParams& radio);
  void charge_rx(PacketKind kind, SimTime airtime, const RadioParams& radio);
};

enum class TxOutcome : std::uint8_t { kOnAir, kDelivered, kLinkBreak, kInjectedLoss, kVirtual };

/// One frame put on the air (or a virtual route-control exchange, which is
/// charged energy but occupies no airtime).
struct TxRecord {
  SimTime start;
  SimTime end;
  NodeId src = kNoNode;
  NodeId dst = kNoNode;
  PacketKind kind = PacketKind::kData;
  FlowId flow = 0;
  std::uint64_t seq = 0;
  std::uint32_t bytes = 0;
  SimTime queue_delay;
  SimTime contention_delay;
  TxOutcome outcome = TxOutcome::kOnAir;
};

/// Shared medium with a simplified carrier-sense MAC.
///
/// A node with a head-of-queue frame transmits at once if no node within
/// interference range is on the air and none is contending; otherwise it
/// waits for its neighbourhood to go idle and then draws a uniform jitter in
/// [0, 1 ms) before re-checking. There is no RTS/CTS, backoff doubling or MAC
/// retransmission. A frame whose receiver has moved out of range by the end of
/// propagation is reported as a link break.
class Channel {
 public:
  struct Handlers {
    /// Called when `pkt` wins the channel, before it goes on the air.
    std::function<void(NodeId node, Packet& pkt, SimTime queue_delay, SimTime contention_delay)> on_grant;
    std::function<void(NodeId at, Packet&& pkt)> on_receive;
    std::function<void(NodeId from, NodeId to, Packet&& pkt)> on_link_break;
    std::function<void(NodeId from, NodeId to, Packet&& pkt)> on_lost;
  };

  static constexpr SimTime kJitterSlot = SimTime::from_ticks(10'000);  // 1 ms

  Channel(Simulator& sim, MobilityModel& mobility, RadioParams radio, std::size_t queue_capacity,
          std::uint64_t seed, double injected_loss = 0.0);

  void set_handlers(Handlers h) { handlers_ = std::move(h); }

  /// Drop-tail enqueue. When the queue is full returns false and leaves
  /// `pkt` untouched.
  bool enqueue(NodeId node, Packet&& pkt, NodeId next_hop);

  /// Removes queued (not yet granted) frames of `node` addressed to `next_hop`.
  std::vector<Packet> purge(NodeId node, NodeId next_hop);

  /// Charges one control frame exchange from -> to without using airtime.
  void charge_virtual(NodeId from, NodeId to, PacketKind kind, std::uint32_t bytes);

  const RadioParams& radio() const { return radio_; }
  const EnergyLedger& ledger(NodeId node) const { return ledgers_[node]; }
  const std::vector<EnergyLedger>& ledgers() const { return ledgers_; }
  const std::vector<TxRecord>& log() const { return log_; }
  std::size_t queue_length(NodeId node) const { return macs_[node].queue.size(); }
  std::size_t queue_capacity() const { return capacity_; }
  std::uint64_t queue_drops() const { return queue_drops_; }

  /// DATA frames of `flow` currently queued or on the air.
  std::size_t data_frames_held(FlowId flow) const;

 private:
  enum class MacState : std::uint8_t { kIdle, kWaiting, kAttempting, kTransmitting };
  struct Frame {
    Packet pkt;
    NodeId next_hop;
    SimTime enqueued_at;
  };
  struct NodeMac {
    std::deque<Frame> queue;
    MacState state = MacState::kIdle;
    SimTime head_since;
    std::uint64_t attempt_token = 0;
  };
  struct Active {
    NodeId node;
    Position pos;
  };

  Position pos(NodeId node);
  bool busy(NodeId node);
  bool contender_nearby(NodeId node);
  void request(NodeId node);
  void schedule_attempt(NodeId node);
  void attempt(NodeId node, std::uint64_t token);
  void grant(NodeId node);
  void tx_end(NodeId node);
  void deliver(std::size_t record, NodeId src, NodeId dst, Packet pkt);
  void remove_contender(NodeId node);

  Simulator& sim_;
  MobilityModel& mobility_;
  RadioParams radio_;
  std::size_t capacity_;
  RngStream jitter_;
  RngStream loss_;
  double injected_loss_;
  Handlers handlers_;

  std::vector<NodeMac> macs_;
  std::vector<EnergyLedger> ledgers_;
  std::vector<Active> active_;
  std::vector<NodeId> contenders_;
  std::vector<TxRecord> log_;
  std::uint64_t queue_drops_ = 0;
  std::map<FlowId, std::size_t> data_on_air_;

  // Position cache for the current tick.
  SimTime cache_time_ = SimTime::from_ticks(-1);
  std::vector<Position> cache_;
  std::vector<std::uint8_t> cache_valid_;
};

}  // namespace drfsim
