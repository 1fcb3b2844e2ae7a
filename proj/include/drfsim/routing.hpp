#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "drfsim/channel.hpp"
#include "drfsim/mobility.hpp"
#include "drfsim/packet.hpp"
#include "drfsim/simulator.hpp"

namespace drfsim {

struct Route {
  std::vector<NodeId> hops;  // source first, destination last
  SimTime established_at;

  std::size_t hop_count() const { return hops.empty() ? 0 : hops.size() - 1; }
};

/// Breadth-first shortest-hop path over the unit-disk graph of `positions`.
/// Neighbours are expanded in ascending id order, so ties resolve toward the
/// lowest identifiers. Empty when src and dst are disconnected.
std::optional<Route> find_route(std::span<const Position> positions, NodeId src, NodeId dst, double tx_range,
                                SimTime t = {});

std::optional<Route> find_route(MobilityModel& mobility, const RadioParams& radio, NodeId src, NodeId dst,
                                SimTime t);

struct LinkBreakNotice {
  FlowId flow = 0;
  NodeId upstream = kNoNode;
  NodeId downstream = kNoNode;
  SimTime detected_at;
};

enum class DropReason : std::uint8_t { kQueueFull, kNoRoute, kLinkBreak, kInjectedLoss };

/// Source routing over cached global-knowledge BFS routes.
///
/// A cache miss runs BFS at the current instant and delays the first packet
/// by one request/reply round trip over the found path; the control frames
/// are charged energy but take no airtime. A link break invalidates every
/// cached route through the link, drops the frames still queued for it and,
/// for DATA/PROBE traffic, sends one ELFN per (flow, route) back to the
/// flow source along the surviving prefix.
class Router {
 public:
  struct Handlers {
    std::function<void(NodeId at, Packet&& pkt)> deliver;
    /// ELFN reached (or was raised locally at) the source of `flow`.
    std::function<void(FlowId flow, NodeId source)> link_failure;
    std::function<void(NodeId at, const Packet& pkt, DropReason why)> dropped;
  };

  Router(Simulator& sim, Channel& channel, MobilityModel& mobility, std::uint32_t control_bytes,
         std::uint32_t elfn_bytes);

  void set_handlers(Handlers h) { handlers_ = std::move(h); }

  /// Originates `pkt` at `from` toward pkt.dst.
  void send(NodeId from, Packet pkt);

  // Channel callbacks.
  void on_receive(NodeId at, Packet&& pkt);
  void on_link_break(NodeId from, NodeId to, Packet&& pkt);
  void on_lost(NodeId from, NodeId to, Packet&& pkt);

  void on_link_break(const LinkBreakNotice& notice, Packet&& pkt);

  std::optional<Route> cached(NodeId src, NodeId dst) const;

  /// DATA packets of `flow` buffered behind a route discovery.
  std::size_t pending_data(FlowId flow) const;
  std::uint64_t discoveries() const { return discoveries_; }
  std::uint64_t elfn_sent() const { return elfn_sent_; }
  std::uint64_t link_breaks() const { return link_breaks_; }

 private:
  struct CacheEntry {
    SourceRoute hops;
    SimTime established_at;
    std::uint64_t generation;
  };
  using Key = std::pair<NodeId, NodeId>;

  void forward(NodeId at, Packet pkt);
  void start_discovery(NodeId from, NodeId dst);
  void finish_discovery(NodeId from, NodeId dst, Route route);
  void invalidate_link(NodeId a, NodeId b);
  void notify_source(const Packet& pkt, NodeId at);
  void drop(NodeId at, const Packet& pkt, DropReason why);

  Simulator& sim_;
  Channel& channel_;
  MobilityModel& mobility_;
  std::uint32_t control_bytes_;
  std::uint32_t elfn_bytes_;
  Handlers handlers_;

  std::map<Key, CacheEntry> cache_;
  std::map<Key, std::vector<Packet>> pending_;
  std::set<std::pair<FlowId, std::uint64_t>> notified_;
  std::uint64_t next_generation_ = 1;
  std::uint64_t discoveries_ = 0;
  std::uint64_t elfn_sent_ = 0;
  std::uint64_t link_breaks_ = 0;
};

}  // namespace drfsim
