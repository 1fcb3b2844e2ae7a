#include "drfsim/scenario.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

namespace drfsim {

namespace {

constexpr int kMaxPairDraws = 100;

MobilityModel make_mobility(const ScenarioConfig& cfg, const ScenarioOptions& opts) {
  if (opts.fixed_positions) return MobilityModel::fixed(*opts.fixed_positions, cfg.grid);
  return MobilityModel::random_waypoint(cfg.node_count, cfg.grid, cfg.speed, cfg.seed);
}

std::uint32_t node_count(const ScenarioConfig& cfg, const ScenarioOptions& opts) {
  return opts.fixed_positions ? static_cast<std::uint32_t>(opts.fixed_positions->size()) : cfg.node_count;
}

}  // namespace

std::vector<FlowEndpoints> draw_flows(const ScenarioConfig& cfg, MobilityModel& mobility) {
  RngStream rng(cfg.seed, "flows");
  const auto n = static_cast<std::uint64_t>(mobility.size());
  std::vector<FlowEndpoints> out;
  for (FlowId f = 0; f < cfg.flows; ++f) {
    FlowEndpoints ep;
    ep.id = f;
    if (cfg.flow_start_window > SimTime{}) {
      ep.start = SimTime::from_ticks(static_cast<std::int64_t>(rng.below(cfg.flow_start_window.ticks())));
    }
    bool found = false;
    for (int attempt = 0; attempt < kMaxPairDraws && !found; ++attempt) {
      ep.src = static_cast<NodeId>(rng.below(n));
      ep.dst = static_cast<NodeId>(rng.below(n - 1));
      if (ep.dst >= ep.src) ++ep.dst;
      found = find_route(mobility, cfg.radio, ep.src, ep.dst, ep.start).has_value();
    }
    if (!found) {
      throw std::runtime_error("flow " + std::to_string(f) + ": no connected source/destination pair after " +
                               std::to_string(kMaxPairDraws) + " draws");
    }
    out.push_back(ep);
  }
  return out;
}

Scenario::Scenario(ScenarioConfig cfg, ScenarioOptions opts)
    : cfg_(std::move(cfg)),
      opts_(std::move(opts)),
      mobility_(make_mobility(cfg_, opts_)),
      channel_(sim_, mobility_, cfg_.radio, cfg_.queue_capacity, cfg_.seed, cfg_.loss_rate),
      router_(sim_, channel_, mobility_, cfg_.control_bytes, cfg_.elfn_bytes) {
  cfg_.validate();
  const std::uint32_t nodes = node_count(cfg_, opts_);
  estimators_.assign(nodes, NodeDelayEstimator{0.0, cfg_.alpha, false});
  sim_.set_trace(opts_.event_trace);

  if (opts_.flow_pairs) {
    FlowId id = 0;
    for (auto [src, dst] : *opts_.flow_pairs) {
      if (src >= nodes || dst >= nodes || src == dst) throw std::invalid_argument("bad scripted flow pair");
      flows_.push_back({id++, src, dst, SimTime{}});
    }
  } else {
    flows_ = draw_flows(cfg_, mobility_);
  }
  dropped_.assign(flows_.size(), 0);

  channel_.set_handlers(Channel::Handlers{
      [this](NodeId node, Packet& pkt, SimTime q, SimTime c) { on_grant(node, pkt, q, c); },
      [this](NodeId at, Packet&& pkt) { router_.on_receive(at, std::move(pkt)); },
      [this](NodeId from, NodeId to, Packet&& pkt) { router_.on_link_break(from, to, std::move(pkt)); },
      [this](NodeId from, NodeId to, Packet&& pkt) { router_.on_lost(from, to, std::move(pkt)); },
  });
  router_.set_handlers(Router::Handlers{
      [this](NodeId at, Packet&& pkt) { on_deliver(at, std::move(pkt)); },
      [this](FlowId flow, NodeId source) {
        if (flow < senders_.size() && senders_[flow]->node() == source) senders_[flow]->on_link_failure();
      },
      [this](NodeId at, const Packet& pkt, DropReason why) { on_drop(at, pkt, why); },
  });

  const TransportConfig tcfg = cfg_.transport();
  for (const FlowEndpoints& ep : flows_) {
    senders_.push_back(std::make_unique<TransportSender>(sim_, ep.id, ep.src, ep.dst, tcfg,
                                                         [this, src = ep.src](Packet p) { router_.send(src, std::move(p)); }));
    receivers_.push_back(std::make_unique<TransportReceiver>(
        sim_, ep.id, ep.dst, ep.src, tcfg, [this, dst = ep.dst](Packet p) { router_.send(dst, std::move(p)); }));
    TransportSender* s = senders_.back().get();
    sim_.schedule(ep.start, EventKind::kFlowStart, ep.src, [s] { s->start(); }, ep.id);
  }

  if (opts_.energy_trace) {
    *opts_.energy_trace << "tick,node_id,e_tx_j,e_rx_j,e_total_j\n";
    sim_.schedule(SimTime{}, EventKind::kSample, kNoNode, [this] { sample_energy(); });
  }
}

void Scenario::run() { sim_.run_until(cfg_.duration); }

bool Scenario::drain(SimTime limit) {
  for (auto& s : senders_) s->stop_application();
  auto settled = [this] {
    for (const auto& s : senders_) {
      if (!s->state().unacked.empty()) return false;
    }
    return true;
  };
  const SimTime end = sim_.now() + limit;
  while (!settled() && sim_.now() < end) {
    sim_.run_until(std::min(end, sim_.now() + milliseconds(100)));
  }
  return settled();
}

void Scenario::on_grant(NodeId node, Packet& pkt, SimTime q, SimTime c) {
  double sample = q.seconds() + c.seconds();
  if (opts_.scripted_delay) {
    if (auto scripted = opts_.scripted_delay(node, pkt, sim_.now())) sample = *scripted;
  }
  estimators_[node] = update_delay_estimate(estimators_[node], sample, 0.0);
  stamp_congestion(pkt, estimators_[node]);
}

void Scenario::on_deliver(NodeId at, Packet&& pkt) {
  if (pkt.flow >= flows_.size()) return;
  switch (pkt.kind) {
    case PacketKind::kData:
    case PacketKind::kProbe:
      if (at == flows_[pkt.flow].dst) receivers_[pkt.flow]->on_packet(pkt);
      break;
    case PacketKind::kAckRate:
      if (at == flows_[pkt.flow].src) senders_[pkt.flow]->on_ack(pkt);
      break;
    default:
      break;
  }
}

void Scenario::on_drop(NodeId at, const Packet& pkt, DropReason why) {
  if (pkt.flow >= flows_.size()) return;
  if (pkt.kind == PacketKind::kData) ++dropped_[pkt.flow];
  if (sim_.tracing()) {
    static constexpr const char* kReason[] = {"queue_full", "no_route", "link_break", "injected_loss"};
    sim_.note(std::string("drop_") + std::string(to_string(pkt.kind)), at,
              std::string(kReason[static_cast<int>(why)]) + ":" + std::to_string(pkt.flow));
  }
  // A source that cannot reach its peer at all goes back to probing.
  if (why == DropReason::kNoRoute && pkt.kind == PacketKind::kData && at == flows_[pkt.flow].src) {
    senders_[pkt.flow]->on_link_failure();
  }
}

void Scenario::sample_energy() {
  char line[160];
  const auto& ledgers = channel_.ledgers();
  for (NodeId n = 0; n < ledgers.size(); ++n) {
    const EnergyLedger& l = ledgers[n];
    std::snprintf(line, sizeof line, "%lld,%u,%.9f,%.9f,%.9f\n", static_cast<long long>(sim_.now().ticks()), n,
                  l.e_tx, l.e_rx, l.total());
    *opts_.energy_trace << line;
  }
  const SimTime next = sim_.now() + cfg_.energy_sample_interval;
  if (next <= cfg_.duration) sim_.schedule(next, EventKind::kSample, kNoNode, [this] { sample_energy(); });
}

FlowStats Scenario::flow_stats(FlowId f) const {
  FlowStats s;
  const TransportSender& tx = *senders_[f];
  const TransportReceiver& rx = *receivers_[f];
  s.sent = tx.data_sent();
  s.delivered = rx.delivered();
  s.retransmitted = tx.retransmitted();
  s.acks_sent = rx.acks_sent();
  s.dropped = dropped_[f] + rx.duplicates();
  s.in_flight = channel_.data_frames_held(f) + router_.pending_data(f);
  s.duration = cfg_.duration.seconds();
  return s;
}

std::int64_t Scenario::conservation_gap(FlowId f) const {
  const FlowStats s = flow_stats(f);
  return static_cast<std::int64_t>(s.sent) -
         static_cast<std::int64_t>(s.delivered + s.dropped + s.in_flight);
}

double Scenario::total_energy() const {
  double e = 0.0;
  for (const EnergyLedger& l : channel_.ledgers()) e += l.total();
  return e;
}

}  // namespace drfsim
