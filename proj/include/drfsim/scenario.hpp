#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "drfsim/channel.hpp"
#include "drfsim/config.hpp"
#include "drfsim/metrics.hpp"
#include "drfsim/mobility.hpp"
#include "drfsim/routing.hpp"
#include "drfsim/simulator.hpp"
#include "drfsim/transport_agents.hpp"

namespace drfsim {

struct FlowEndpoints {
  FlowId id = 0;
  NodeId src = kNoNode;
  NodeId dst = kNoNode;
  SimTime start;
};

/// Draws `cfg.flows` source/destination pairs from the "flows" stream.
/// src != dst; pairs disconnected at their start instant are redrawn, up to
/// 100 attempts per flow (std::runtime_error after that).
std::vector<FlowEndpoints> draw_flows(const ScenarioConfig& cfg, MobilityModel& mobility);

/// Test and tooling overrides. Everything defaults to the normal run.
struct ScenarioOptions {
  std::optional<std::vector<Position>> fixed_positions;
  std::optional<std::vector<std::pair<NodeId, NodeId>>> flow_pairs;  // all start at t = 0
  /// Replaces the (queue + contention) sample a node feeds its estimator
  /// when it returns a value.
  std::function<std::optional<double>(NodeId node, const Packet& pkt, SimTime now)> scripted_delay;
  std::ostream* event_trace = nullptr;
  std::ostream* energy_trace = nullptr;  // tick,node_id,e_tx_j,e_rx_j,e_total_j
};

/// Fully wired simulation of one scenario: mobility, channel, routing and
/// one sender/receiver pair per flow.
class Scenario {
 public:
  explicit Scenario(ScenarioConfig cfg, ScenarioOptions opts = {});
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;

  /// Runs to cfg.duration.
  void run();
  /// Stops every application and keeps running until each sender has no
  /// unacknowledged data or `limit` of extra time has passed. Returns true
  /// when everything was acknowledged.
  bool drain(SimTime limit);

  const ScenarioConfig& config() const { return cfg_; }
  Simulator& sim() { return sim_; }
  MobilityModel& mobility() { return mobility_; }
  const Channel& channel() const { return channel_; }
  const Router& router() const { return router_; }
  const std::vector<FlowEndpoints>& flows() const { return flows_; }
  const TransportSender& sender(FlowId f) const { return *senders_[f]; }
  const TransportReceiver& receiver(FlowId f) const { return *receivers_[f]; }

  /// Per-flow counters at the current instant.
  FlowStats flow_stats(FlowId f) const;
  /// Frames of `f` handed to the network minus those accounted for
  /// (delivered, duplicate, dropped, still held). Zero when nothing leaked.
  std::int64_t conservation_gap(FlowId f) const;
  std::uint64_t dropped(FlowId f) const { return dropped_[f]; }
  /// Total energy of every node.
  double total_energy() const;

 private:
  void on_grant(NodeId node, Packet& pkt, SimTime q, SimTime c);
  void on_deliver(NodeId at, Packet&& pkt);
  void on_drop(NodeId at, const Packet& pkt, DropReason why);
  void sample_energy();

  ScenarioConfig cfg_;
  ScenarioOptions opts_;
  Simulator sim_;
  MobilityModel mobility_;
  Channel channel_;
  Router router_;
  std::vector<NodeDelayEstimator> estimators_;
  std::vector<FlowEndpoints> flows_;
  std::vector<std::unique_ptr<TransportSender>> senders_;
  std::vector<std::unique_ptr<TransportReceiver>> receivers_;
  std::vector<std::uint64_t> dropped_;
};

}  // namespace drfsim
