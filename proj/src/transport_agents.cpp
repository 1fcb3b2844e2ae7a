#include "drfsim/transport_agents.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drfsim {

TransportSender::TransportSender(Simulator& sim, FlowId flow, NodeId self, NodeId peer, const TransportConfig& cfg,
                                 SendFn send)
    : sim_(sim), flow_(flow), self_(self), peer_(peer), cfg_(cfg), send_(std::move(send)) {
  st_.params = cfg_.rate;
}

void TransportSender::start() { enter_probe(); }

void TransportSender::note_rate() {
  if (log_.sender_rate.empty() || log_.sender_rate.back().rate != st_.rate_s) {
    if (!log_.sender_rate.empty() && log_.sender_rate.back().t == sim_.now()) {
      log_.sender_rate.back().rate = st_.rate_s;
    } else {
      log_.sender_rate.push_back({sim_.now(), st_.rate_s});
    }
  }
}

void TransportSender::enter_probe() {
  st_.phase = SenderPhase::kProbe;
  ++probe_entries_;
  ++watch_token_;
  const std::uint64_t round = ++probe_round_;
  send_probe(round);
}

void TransportSender::send_probe(std::uint64_t round) {
  if (round != probe_round_ || st_.phase != SenderPhase::kProbe) return;
  Packet probe;
  probe.kind = PacketKind::kProbe;
  probe.flow = flow_;
  probe.size = cfg_.probe_bytes;
  probe.dst = peer_;
  probe.created_at = sim_.now();
  ++probes_sent_;
  send_(std::move(probe));
  sim_.schedule_in(cfg_.probe_interval, EventKind::kProbeTimer, self_, [this, round] { send_probe(round); }, flow_);
}

void TransportSender::connect(double rate) {
  st_.phase = SenderPhase::kConnected;
  st_.rate_s = std::clamp(rate, 1e-9, st_.params.rate_cap);
  st_.missed_feedback_periods = 0;
  st_.last_feedback_at = sim_.now();
  ++probe_round_;  // cancels the pending probe retry
  note_rate();
  arm_watchdog();
  ensure_tick();
}

void TransportSender::on_ack(const Packet& ack) {
  if (st_.phase == SenderPhase::kProbe && ack.probe_reply) {
    Packet prune = ack;
    prune.rate_feedback = 0.0;
    sender_on_ack(st_, prune, sim_.now());
    connect(ack.rate_feedback);
    return;
  }
  sender_on_ack(st_, ack, sim_.now());
  note_rate();
  if (st_.phase == SenderPhase::kConnected) arm_watchdog();
}

void TransportSender::on_link_failure() {
  if (st_.phase != SenderPhase::kConnected) return;
  if (sim_.tracing()) sim_.note("elfn_received", self_, std::to_string(flow_));
  enter_probe();
}

void TransportSender::ensure_tick() {
  if (tick_pending_) return;
  tick_pending_ = true;
  sim_.schedule_in(SimTime{}, EventKind::kSenderTick, self_, [this] { tick(); }, flow_);
}

void TransportSender::tick() {
  tick_pending_ = false;
  if (st_.phase != SenderPhase::kConnected) return;
  if (auto seq = next_data_seq(st_, app_active_)) {
    const bool resend = st_.unacked.contains(*seq);
    Packet pkt;
    pkt.kind = PacketKind::kData;
    pkt.flow = flow_;
    pkt.seq = *seq;
    pkt.size = cfg_.data_bytes;
    pkt.dst = peer_;
    pkt.created_at = sim_.now();
    pkt.send_serial = record_send(st_, *seq, sim_.now());
    ++data_sent_;
    if (resend) ++retransmitted_;
    send_(std::move(pkt));
  }
  // The send just made may have triggered a synchronous failure.
  if (st_.phase != SenderPhase::kConnected) return;
  const SimTime gap = std::max(SimTime::from_ticks(1), SimTime::from_seconds(1.0 / st_.rate_s));
  tick_pending_ = true;
  sim_.schedule_in(gap, EventKind::kSenderTick, self_, [this] { tick(); }, flow_);
}

void TransportSender::arm_watchdog() {
  const std::uint64_t token = ++watch_token_;
  const LivenessPolicy policy = cfg_.liveness();
  auto check = [this, token, policy] {
    if (token != watch_token_) return;
    const double before = st_.rate_s;
    switch (sender_liveness_check(st_, sim_.now(), policy)) {
      case LivenessAction::kEnterProbe:
        ++liveness_probes_;
        enter_probe();
        break;
      case LivenessAction::kRateHalved:
        if (st_.rate_s != before) note_rate();
        break;
      case LivenessAction::kNone:
        break;
    }
  };
  const SimTime base = st_.last_feedback_at;
  if (policy.epoch_paired) {
    sim_.schedule(base + policy.period * 2, EventKind::kWatchdog, self_, check, flow_);
    sim_.schedule(base + policy.period * 3, EventKind::kWatchdog, self_, check, flow_);
  } else {
    sim_.schedule(base + policy.watchdog, EventKind::kWatchdog, self_, check, flow_);
  }
}

TransportReceiver::TransportReceiver(Simulator& sim, FlowId flow, NodeId self, NodeId peer,
                                     const TransportConfig& cfg, SendFn send)
    : sim_(sim), flow_(flow), self_(self), peer_(peer), cfg_(cfg), send_(std::move(send)) {
  st_.policy = cfg_.feedback;
  st_.alpha_r = cfg_.alpha_r;
}

void TransportReceiver::on_packet(const Packet& pkt) {
  if (pkt.kind == PacketKind::kProbe) {
    on_probe(pkt);
  } else if (pkt.kind == PacketKind::kData) {
    on_data(pkt);
  }
}

void TransportReceiver::on_probe(const Packet& pkt) {
  // A probe starts a new connection: collation restarts from its stamp.
  st_.collated_initialized = false;
  rate_ = collate_rate(st_, pkt.congestion_delay);
  log_.receiver_rate.push_back({sim_.now(), rate_});
  log_.arrivals.push_back({sim_.now(), true, 0, pkt.congestion_delay, rate_, false, true, FeedbackTrigger::kFirst});
  emit_ack(FeedbackTrigger::kFirst, true);
}

void TransportReceiver::on_data(const Packet& pkt) {
  st_.data_seen = true;
  ++st_.data_since_ack;
  bool duplicate = false;
  const bool loss = detect_loss(st_, pkt.seq, &duplicate);
  if (duplicate) ++duplicates_;
  rate_ = collate_rate(st_, pkt.congestion_delay);
  if (!log_.receiver_rate.empty() && log_.receiver_rate.back().t == sim_.now()) {
    log_.receiver_rate.back().rate = rate_;
  } else {
    log_.receiver_rate.push_back({sim_.now(), rate_});
  }

  ArrivalRecord rec{sim_.now(), false, pkt.seq, pkt.congestion_delay, rate_, loss, false, FeedbackTrigger::kDrfChange};
  if (st_.policy.mode == FeedbackMode::kDrf && drf_feedback_due(st_, rate_, loss)) {
    FeedbackTrigger trigger = FeedbackTrigger::kDrfLoss;
    if (!st_.feedback_sent) {
      trigger = FeedbackTrigger::kFirst;
    } else if (std::fabs(rate_ - st_.r_last) >= st_.policy.threshold * st_.r_last) {
      trigger = FeedbackTrigger::kDrfChange;
    }
    rec.emitted = true;
    rec.trigger = trigger;
    log_.arrivals.push_back(rec);
    emit_ack(trigger, false);
    return;
  }
  if (st_.policy.mode == FeedbackMode::kEpochTimer && loss && st_.policy.sack_cadence > 0 &&
      st_.data_since_ack >= st_.policy.sack_cadence) {
    rec.emitted = true;
    rec.trigger = FeedbackTrigger::kDrfLoss;
    log_.arrivals.push_back(rec);
    emit_ack(FeedbackTrigger::kDrfLoss, false);
    return;
  }
  log_.arrivals.push_back(rec);
}

void TransportReceiver::emit_ack(FeedbackTrigger trigger, bool probe_reply) {
  Packet ack;
  ack.kind = PacketKind::kAckRate;
  ack.flow = flow_;
  ack.size = cfg_.ack_bytes;
  ack.dst = peer_;
  ack.rate_feedback = rate_;
  ack.probe_reply = probe_reply;
  ack.created_at = sim_.now();
  if (!st_.received.empty()) ack.sack = build_sack(st_);

  st_.r_last = rate_;
  st_.feedback_sent = true;
  st_.data_since_ack = 0;
  st_.last_ack_at = sim_.now();
  ++acks_sent_;
  log_.feedback.push_back({sim_.now(), trigger, rate_});
  if (st_.policy.mode == FeedbackMode::kEpochTimer) arm_epoch(sim_.now() + st_.policy.epoch);
  send_(std::move(ack));
}

void TransportReceiver::arm_epoch(SimTime at) {
  const std::uint64_t token = ++epoch_token_;
  sim_.schedule(at, EventKind::kEpochTimer, self_, [this, token] { epoch_fired(token); }, flow_);
}

void TransportReceiver::epoch_fired(std::uint64_t token) {
  if (token != epoch_token_) return;
  if (epoch_feedback_due(st_, sim_.now())) {
    emit_ack(FeedbackTrigger::kEpoch, false);
  } else {
    arm_epoch(sim_.now() + st_.policy.epoch);
  }
}

}  // namespace drfsim
