#include "drfsim/routing.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace drfsim {

std::optional<Route> find_route(std::span<const Position> positions, NodeId src, NodeId dst, double tx_range,
                                SimTime t) {
  const std::size_t n = positions.size();
  if (src >= n || dst >= n) return std::nullopt;
  if (src == dst) return Route{{src}, t};

  std::vector<NodeId> parent(n, kNoNode);
  std::vector<std::uint8_t> seen(n, 0);
  std::deque<NodeId> frontier{src};
  seen[src] = 1;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v = 0; v < n; ++v) {
      if (seen[v] || distance(positions[u], positions[v]) > tx_range) continue;
      seen[v] = 1;
      parent[v] = u;
      if (v == dst) {
        Route r{{}, t};
        for (NodeId x = dst; x != kNoNode; x = parent[x]) r.hops.push_back(x);
        std::reverse(r.hops.begin(), r.hops.end());
        return r;
      }
      frontier.push_back(v);
    }
  }
  return std::nullopt;
}

std::optional<Route> find_route(MobilityModel& mobility, const RadioParams& radio, NodeId src, NodeId dst,
                                SimTime t) {
  const std::vector<Position> snap = mobility.snapshot(t);
  return find_route(snap, src, dst, radio.tx_range, t);
}

Router::Router(Simulator& sim, Channel& channel, MobilityModel& mobility, std::uint32_t control_bytes,
               std::uint32_t elfn_bytes)
    : sim_(sim), channel_(channel), mobility_(mobility), control_bytes_(control_bytes), elfn_bytes_(elfn_bytes) {}

std::optional<Route> Router::cached(NodeId src, NodeId dst) const {
  auto it = cache_.find({src, dst});
  if (it == cache_.end()) return std::nullopt;
  return Route{*it->second.hops, it->second.established_at};
}

void Router::send(NodeId from, Packet pkt) {
  pkt.src = from;
  if (from == pkt.dst) {
    if (handlers_.deliver) handlers_.deliver(from, std::move(pkt));
    return;
  }
  const Key key{from, pkt.dst};
  if (auto it = cache_.find(key); it != cache_.end()) {
    pkt.route = it->second.hops;
    pkt.route_generation = it->second.generation;
    pkt.hop = 0;
    forward(from, std::move(pkt));
    return;
  }
  auto [it, fresh] = pending_.try_emplace(key);
  it->second.push_back(std::move(pkt));
  if (fresh) start_discovery(from, key.second);
}

void Router::start_discovery(NodeId from, NodeId dst) {
  ++discoveries_;
  const SimTime now = sim_.now();
  std::optional<Route> route = find_route(mobility_, channel_.radio(), from, dst, now);
  if (!route) {
    std::vector<Packet> waiting = std::move(pending_[{from, dst}]);
    pending_.erase({from, dst});
    if (sim_.tracing()) sim_.note("no_route", from, std::to_string(dst));
    for (const Packet& p : waiting) drop(from, p, DropReason::kNoRoute);
    return;
  }
  // Request out, reply back, each hop one control frame.
  const auto& hops = route->hops;
  const SimTime per_hop = tx_duration(control_bytes_, channel_.radio().bitrate) + channel_.radio().prop_delay;
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
    channel_.charge_virtual(hops[i], hops[i + 1], PacketKind::kRouteControl, control_bytes_);
  }
  for (std::size_t i = hops.size() - 1; i > 0; --i) {
    channel_.charge_virtual(hops[i], hops[i - 1], PacketKind::kRouteControl, control_bytes_);
  }
  const SimTime latency = per_hop * static_cast<std::int64_t>(2 * route->hop_count());
  sim_.schedule_in(latency, EventKind::kRouteReady, from,
                   [this, from, dst, r = std::move(*route)]() mutable { finish_discovery(from, dst, std::move(r)); });
}

void Router::finish_discovery(NodeId from, NodeId dst, Route route) {
  const Key key{from, dst};
  CacheEntry entry{std::make_shared<const std::vector<NodeId>>(std::move(route.hops)), route.established_at,
                   next_generation_++};
  cache_[key] = entry;
  if (sim_.tracing()) sim_.note("route_found", from, std::to_string(dst) + ":" + std::to_string(entry.hops->size() - 1));
  std::vector<Packet> waiting = std::move(pending_[key]);
  pending_.erase(key);
  for (Packet& p : waiting) {
    p.route = entry.hops;
    p.route_generation = entry.generation;
    p.hop = 0;
    forward(from, std::move(p));
  }
}

void Router::forward(NodeId at, Packet pkt) {
  const NodeId next = pkt.next_hop();
  if (!channel_.enqueue(at, std::move(pkt), next)) drop(at, pkt, DropReason::kQueueFull);
}

void Router::on_receive(NodeId at, Packet&& pkt) {
  ++pkt.hop;
  if (pkt.hop + 1 < pkt.route->size()) {
    forward(at, std::move(pkt));
    return;
  }
  if (pkt.kind == PacketKind::kElfn) {
    if (sim_.tracing()) sim_.note("elfn_delivered", at, std::to_string(pkt.flow));
    if (handlers_.link_failure) handlers_.link_failure(pkt.flow, at);
    return;
  }
  if (handlers_.deliver) handlers_.deliver(at, std::move(pkt));
}

void Router::on_link_break(NodeId from, NodeId to, Packet&& pkt) {
  on_link_break(LinkBreakNotice{pkt.flow, from, to, sim_.now()}, std::move(pkt));
}

void Router::on_link_break(const LinkBreakNotice& notice, Packet&& pkt) {
  ++link_breaks_;
  if (sim_.tracing()) {
    sim_.note("link_break", notice.upstream, std::to_string(notice.downstream) + ":" + std::to_string(notice.flow));
  }
  invalidate_link(notice.upstream, notice.downstream);
  std::vector<Packet> stranded = channel_.purge(notice.upstream, notice.downstream);
  drop(notice.upstream, pkt, DropReason::kLinkBreak);
  notify_source(pkt, notice.upstream);
  for (const Packet& p : stranded) {
    drop(notice.upstream, p, DropReason::kLinkBreak);
    notify_source(p, notice.upstream);
  }
}

void Router::on_lost(NodeId from, NodeId /*to*/, Packet&& pkt) { drop(from, pkt, DropReason::kInjectedLoss); }

void Router::invalidate_link(NodeId a, NodeId b) {
  for (auto it = cache_.begin(); it != cache_.end();) {
    const auto& hops = *it->second.hops;
    bool uses = false;
    for (std::size_t i = 0; i + 1 < hops.size() && !uses; ++i) {
      uses = (hops[i] == a && hops[i + 1] == b) || (hops[i] == b && hops[i + 1] == a);
    }
    it = uses ? cache_.erase(it) : std::next(it);
  }
}

void Router::notify_source(const Packet& pkt, NodeId at) {
  if (pkt.kind != PacketKind::kData && pkt.kind != PacketKind::kProbe) return;
  if (!notified_.insert({pkt.flow, pkt.route_generation}).second) return;
  if (at == pkt.src) {
    if (handlers_.link_failure) handlers_.link_failure(pkt.flow, at);
    return;
  }
  const auto& hops = *pkt.route;
  auto upto = std::find(hops.begin(), hops.end(), at);
  std::vector<NodeId> back(hops.begin(), std::next(upto));
  std::reverse(back.begin(), back.end());

  Packet elfn;
  elfn.kind = PacketKind::kElfn;
  elfn.flow = pkt.flow;
  elfn.size = elfn_bytes_;
  elfn.src = at;
  elfn.dst = pkt.src;
  elfn.route = std::make_shared<const std::vector<NodeId>>(std::move(back));
  elfn.hop = 0;
  elfn.created_at = sim_.now();
  ++elfn_sent_;
  forward(at, std::move(elfn));
}

void Router::drop(NodeId at, const Packet& pkt, DropReason why) {
  if (handlers_.dropped) handlers_.dropped(at, pkt, why);
}

std::size_t Router::pending_data(FlowId flow) const {
  std::size_t n = 0;
  for (const auto& [key, packets] : pending_) {
    for (const Packet& p : packets) n += p.kind == PacketKind::kData && p.flow == flow;
  }
  return n;
}

}  // namespace drfsim
