#pragma once

#include <cstdint>
#include <functional>

#include "drfsim/flow_log.hpp"
#include "drfsim/packet.hpp"
#include "drfsim/simulator.hpp"
#include "drfsim/transport.hpp"

namespace drfsim {

struct TransportConfig {
  FeedbackPolicy feedback;
  RateParams rate;
  double alpha_r = 0.75;
  std::uint32_t data_bytes = 512;
  std::uint32_t ack_bytes = 40;
  std::uint32_t probe_bytes = 40;
  SimTime probe_interval = seconds(1);
  SimTime drf_watchdog = seconds(3);

  LivenessPolicy liveness() const {
    return LivenessPolicy{feedback.mode == FeedbackMode::kEpochTimer, feedback.epoch, drf_watchdog};
  }
};

using SendFn = std::function<void(Packet)>;

/// Rate-clocked sender of one flow. DATA leaves on a timer at rate S; ACKs
/// only adjust S and the retransmission set, they never clock transmissions.
class TransportSender {
 public:
  TransportSender(Simulator& sim, FlowId flow, NodeId self, NodeId peer, const TransportConfig& cfg, SendFn send);

  /// Opens the connection (probe phase).
  void start();
  void on_ack(const Packet& ack);
  /// ELFN arrival or a local no-route failure.
  void on_link_failure();
  /// Saturated source stops producing new data; retransmissions continue.
  void stop_application() { app_active_ = false; }

  const SenderState& state() const { return st_; }
  const FlowLog& log() const { return log_; }
  NodeId node() const { return self_; }

  std::uint64_t data_sent() const { return data_sent_; }
  std::uint64_t retransmitted() const { return retransmitted_; }
  std::uint64_t probes_sent() const { return probes_sent_; }
  std::uint64_t probe_entries() const { return probe_entries_; }
  std::uint64_t liveness_probes() const { return liveness_probes_; }

 private:
  void enter_probe();
  void send_probe(std::uint64_t round);
  void connect(double rate);
  void tick();
  void ensure_tick();
  void arm_watchdog();
  void note_rate();

  Simulator& sim_;
  FlowId flow_;
  NodeId self_;
  NodeId peer_;
  TransportConfig cfg_;
  SendFn send_;
  SenderState st_;
  FlowLog log_;
  bool app_active_ = true;
  bool tick_pending_ = false;
  std::uint64_t probe_round_ = 0;
  std::uint64_t watch_token_ = 0;

  std::uint64_t data_sent_ = 0;
  std::uint64_t retransmitted_ = 0;
  std::uint64_t probes_sent_ = 0;
  std::uint64_t probe_entries_ = 0;
  std::uint64_t liveness_probes_ = 0;
};

/// Receiver of one flow under either feedback policy.
class TransportReceiver {
 public:
  TransportReceiver(Simulator& sim, FlowId flow, NodeId self, NodeId peer, const TransportConfig& cfg, SendFn send);

  void on_packet(const Packet& pkt);

  const ReceiverState& state() const { return st_; }
  const FlowLog& log() const { return log_; }
  NodeId node() const { return self_; }

  std::uint64_t acks_sent() const { return acks_sent_; }
  std::uint64_t delivered() const { return st_.received.size(); }
  std::uint64_t duplicates() const { return duplicates_; }
  double current_rate() const { return rate_; }

 private:
  void on_probe(const Packet& pkt);
  void on_data(const Packet& pkt);
  void emit_ack(FeedbackTrigger trigger, bool probe_reply);
  void arm_epoch(SimTime at);
  void epoch_fired(std::uint64_t token);

  Simulator& sim_;
  FlowId flow_;
  NodeId self_;
  NodeId peer_;
  TransportConfig cfg_;
  SendFn send_;
  ReceiverState st_;
  FlowLog log_;
  double rate_ = 0.0;
  std::uint64_t epoch_token_ = 0;
  std::uint64_t acks_sent_ = 0;
  std::uint64_t duplicates_ = 0;
};

}  // namespace drfsim
