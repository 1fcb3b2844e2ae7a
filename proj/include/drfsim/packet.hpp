#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "drfsim/sim_time.hpp"

namespace drfsim {

enum class PacketKind : std::uint8_t { kData, kProbe, kAckRate, kElfn, kRouteControl };

inline constexpr std::size_t kPacketKindCount = 5;

std::string_view to_string(PacketKind kind);

/// Inclusive range of received sequence numbers.
struct SackBlock {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  friend bool operator==(const SackBlock&, const SackBlock&) = default;
};

using SourceRoute = std::shared_ptr<const std::vector<NodeId>>;

struct Packet {
  PacketKind kind = PacketKind::kData;
  FlowId flow = 0;
  std::uint64_t seq = 0;       // DATA only
  std::uint32_t size = 0;      // bytes
  double congestion_delay = 0; // seconds, max-stamped en route (DATA, PROBE)
  double rate_feedback = 0;    // packets/s (ACK_RATE)
  std::vector<SackBlock> sack; // ACK_RATE
  bool probe_reply = false;    // ACK_RATE answering a PROBE

  // Network layer.
  NodeId src = kNoNode;
  NodeId dst = kNoNode;
  SourceRoute route;           // full hop list, src first
  std::size_t hop = 0;         // index of the node currently holding the packet
  std::uint64_t route_generation = 0;
  std::uint64_t send_serial = 0;  // transport transmission counter, DATA only
  SimTime created_at;

  NodeId next_hop() const { return (*route)[hop + 1]; }
};

}  // namespace drfsim
