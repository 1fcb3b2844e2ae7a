#include "drfsim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>

namespace drfsim {

NodeDelayEstimator update_delay_estimate(NodeDelayEstimator est, double queue_delay, double contention_delay) {
  const double sample = queue_delay + contention_delay;
  if (!est.initialized) {
    est.d_avg = sample;
    est.initialized = true;
    return est;
  }
  est.d_avg = est.alpha * est.d_avg + (1.0 - est.alpha) * sample;
  return est;
}

void stamp_congestion(Packet& pkt, const NodeDelayEstimator& est) {
  if (pkt.kind != PacketKind::kData && pkt.kind != PacketKind::kProbe) return;
  pkt.congestion_delay = std::max(pkt.congestion_delay, est.d_avg);
}

bool SequenceSet::insert(std::uint64_t seq) {
  auto next = ranges_.upper_bound(seq);
  if (next != ranges_.begin()) {
    auto prev = std::prev(next);
    if (seq <= prev->second) return false;
    if (prev->second + 1 == seq) {
      prev->second = seq;
      if (next != ranges_.end() && next->first == seq + 1) {
        prev->second = next->second;
        ranges_.erase(next);
      }
      ++count_;
      return true;
    }
  }
  if (next != ranges_.end() && next->first == seq + 1) {
    const std::uint64_t last = next->second;
    ranges_.erase(next);
    ranges_.emplace(seq, last);
  } else {
    ranges_.emplace(seq, seq);
  }
  ++count_;
  return true;
}

bool SequenceSet::contains(std::uint64_t seq) const {
  auto next = ranges_.upper_bound(seq);
  if (next == ranges_.begin()) return false;
  return seq <= std::prev(next)->second;
}

std::vector<SackBlock> SequenceSet::blocks() const {
  std::vector<SackBlock> out;
  out.reserve(ranges_.size());
  for (const auto& [first, last] : ranges_) out.push_back({first, last});
  return out;
}

std::string_view to_string(FeedbackTrigger t) {
  switch (t) {
    case FeedbackTrigger::kEpoch: return "epoch";
    case FeedbackTrigger::kDrfChange: return "drf_change";
    case FeedbackTrigger::kDrfLoss: return "drf_loss";
    case FeedbackTrigger::kFirst: return "first";
  }
  return "unknown";
}

double collate_rate(ReceiverState& recv, double pkt_delay) {
  constexpr double kTick = 1.0 / SimTime::kTicksPerSecond;
  if (!(pkt_delay > 0.0)) {
    ++recv.unstamped;
    pkt_delay = kTick;
  }
  if (!recv.collated_initialized) {
    recv.d_collated = pkt_delay;
    recv.collated_initialized = true;
  } else {
    recv.d_collated = recv.alpha_r * recv.d_collated + (1.0 - recv.alpha_r) * pkt_delay;
  }
  return 1.0 / std::max(recv.d_collated, kTick);
}

bool epoch_feedback_due(const ReceiverState& recv, SimTime now) {
  return recv.data_seen && now - recv.last_ack_at >= recv.policy.epoch;
}

bool drf_feedback_due(const ReceiverState& recv, double r_new, bool loss_detected) {
  if (!recv.feedback_sent || loss_detected) return true;
  return std::fabs(r_new - recv.r_last) >= recv.policy.threshold * recv.r_last;
}

bool detect_loss(ReceiverState& recv, std::uint64_t seq, bool* duplicate) {
  const bool had_any = !recv.received.empty();
  const std::uint64_t highest = had_any ? recv.received.highest() : 0;
  const bool fresh = recv.received.insert(seq);
  if (duplicate) *duplicate = !fresh;
  if (!fresh) return false;
  return had_any ? seq > highest + 1 : seq > 0;
}

std::vector<SackBlock> build_sack(const ReceiverState& recv) {
  if (recv.received.empty()) throw std::logic_error("build_sack: nothing received");
  std::vector<SackBlock> blocks = recv.received.blocks();
  if (blocks.size() > kMaxSackBlocks) {
    std::vector<SackBlock> capped{blocks.front()};
    capped.insert(capped.end(), blocks.end() - (kMaxSackBlocks - 1), blocks.end());
    return capped;
  }
  return blocks;
}

void update_sender_rate(SenderState& st, double r_feedback) {
  const RateParams& p = st.params;
  double s = st.rate_s;
  if (r_feedback > s * (1.0 + p.x)) {
    s = s + (r_feedback - s) / p.k;
  } else if (r_feedback < s) {
    s = r_feedback;
  }
  st.rate_s = std::min(s, p.rate_cap);
  st.missed_feedback_periods = 0;
}

AckOutcome sender_on_ack(SenderState& st, const Packet& ack, SimTime now) {
  AckOutcome out;
  std::uint64_t highest_sacked = 0;
  for (const SackBlock& b : ack.sack) {
    highest_sacked = std::max(highest_sacked, b.last);
    for (auto it = st.unacked.lower_bound(b.first); it != st.unacked.end() && it->first <= b.last;) {
      st.delivered_serial = std::max(st.delivered_serial, it->second.serial);
      st.retransmit.erase(it->first);
      it = st.unacked.erase(it);
      ++out.acknowledged;
    }
  }
  if (!ack.sack.empty()) {
    // Below the highest SACKed sequence a later delivery proves the loss;
    // above it (the tail) only the timeout does.
    for (auto& [seq, info] : st.unacked) {
      const bool overtaken = seq < highest_sacked && info.serial < st.delivered_serial;
      const bool stale = now - info.last_sent >= kRetransmitTimeout;
      if ((overtaken || stale) && st.retransmit.insert(seq).second) ++out.queued_for_retransmit;
    }
  }
  if (ack.rate_feedback > 0.0) update_sender_rate(st, ack.rate_feedback);
  st.missed_feedback_periods = 0;
  st.last_feedback_at = now;
  return out;
}

std::optional<std::uint64_t> next_data_seq(SenderState& st, bool app_active) {
  while (!st.retransmit.empty()) {
    const std::uint64_t seq = *st.retransmit.begin();
    st.retransmit.erase(st.retransmit.begin());
    if (st.unacked.contains(seq)) return seq;
  }
  if (!app_active) return std::nullopt;
  return st.next_seq++;
}

std::uint64_t record_send(SenderState& st, std::uint64_t seq, SimTime now) {
  SentInfo& info = st.unacked[seq];
  info.serial = st.next_serial++;
  info.last_sent = now;
  ++info.transmissions;
  return info.serial;
}

LivenessAction sender_liveness_check(SenderState& st, SimTime now, const LivenessPolicy& policy) {
  if (st.phase != SenderPhase::kConnected) return LivenessAction::kNone;
  const SimTime silent = now - st.last_feedback_at;
  if (!policy.epoch_paired) {
    if (silent >= policy.watchdog) {
      st.phase = SenderPhase::kProbe;
      return LivenessAction::kEnterProbe;
    }
    return LivenessAction::kNone;
  }
  const auto missed = static_cast<std::uint32_t>(silent.ticks() / policy.period.ticks());
  if (missed >= 3) {
    st.missed_feedback_periods = missed;
    st.phase = SenderPhase::kProbe;
    return LivenessAction::kEnterProbe;
  }
  if (missed >= 2 && st.missed_feedback_periods < 2) {
    st.missed_feedback_periods = missed;
    st.rate_s /= 2.0;
    return LivenessAction::kRateHalved;
  }
  st.missed_feedback_periods = std::max(st.missed_feedback_periods, missed);
  return LivenessAction::kNone;
}

}  // namespace drfsim
