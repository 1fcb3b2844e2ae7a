#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "drfsim/packet.hpp"
#include "drfsim/sim_time.hpp"

namespace drfsim {

// ---------------------------------------------------------------------------
// Intermediate-node congestion information
// ---------------------------------------------------------------------------

/// Exponentially weighted average of the queuing + contention delay seen by
/// frames leaving one node.
struct NodeDelayEstimator {
  double d_avg = 0.0;  // seconds
  double alpha = 0.75;
  bool initialized = false;
};

/// d' = alpha * d + (1 - alpha) * (q + c); the first sample initializes d.
NodeDelayEstimator update_delay_estimate(NodeDelayEstimator est, double queue_delay, double contention_delay);

/// Max-stamps the node's delay estimate into a DATA or PROBE packet.
void stamp_congestion(Packet& pkt, const NodeDelayEstimator& est);

// ---------------------------------------------------------------------------
// Sequence bookkeeping
// ---------------------------------------------------------------------------

/// Set of sequence numbers stored as disjoint inclusive intervals.
class SequenceSet {
 public:
  /// Returns false if `seq` was already present.
  bool insert(std::uint64_t seq);
  bool contains(std::uint64_t seq) const;
  bool empty() const { return ranges_.empty(); }
  std::uint64_t size() const { return count_; }
  std::uint64_t highest() const { return std::prev(ranges_.end())->second; }
  std::vector<SackBlock> blocks() const;

 private:
  std::map<std::uint64_t, std::uint64_t> ranges_;  // first -> last
  std::uint64_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Receiver
// ---------------------------------------------------------------------------

enum class FeedbackMode : std::uint8_t { kEpochTimer, kDrf };

struct FeedbackPolicy {
  FeedbackMode mode = FeedbackMode::kDrf;
  SimTime epoch = seconds(1);  // kEpochTimer
  double threshold = 0.25;     // kDrf, relative rate change
  // kEpochTimer: a detected loss may add an ACK once this many DATA packets
  // arrived since the previous one. 0 disables loss ACKs.
  std::uint32_t sack_cadence = 20;
};

enum class FeedbackTrigger : std::uint8_t { kEpoch, kDrfChange, kDrfLoss, kFirst };

std::string_view to_string(FeedbackTrigger t);

struct ReceiverState {
  FeedbackPolicy policy;
  double alpha_r = 0.75;
  double r_last = 0.0;          // last rate reported
  bool feedback_sent = false;
  double d_collated = 0.0;      // seconds
  bool collated_initialized = false;
  SequenceSet received;
  std::uint64_t data_since_ack = 0;
  SimTime last_ack_at;
  bool data_seen = false;
  std::uint64_t unstamped = 0;  // zero-delay packets clamped by collate_rate
};

/// Folds one stamped delay into the collated average and returns 1/d.
/// Zero delays are clamped to one tick.
double collate_rate(ReceiverState& recv, double pkt_delay);

/// Epoch policy: true iff a full period has passed since the last ACK and
/// data has arrived since the connection started.
bool epoch_feedback_due(const ReceiverState& recv, SimTime now);

/// DRF policy: first feedback, a relative change of at least `threshold`
/// against the last reported rate, or a detected loss.
bool drf_feedback_due(const ReceiverState& recv, double r_new, bool loss_detected);

/// Records `seq` and reports whether it opens or widens a gap below it.
/// Duplicates return false and set *duplicate.
bool detect_loss(ReceiverState& recv, std::uint64_t seq, bool* duplicate = nullptr);

inline constexpr std::size_t kMaxSackBlocks = 8;

/// Sorted disjoint blocks covering the received set: the lowest block plus
/// the most recent ones, at most kMaxSackBlocks in total. The set must be
/// non-empty (std::logic_error otherwise).
std::vector<SackBlock> build_sack(const ReceiverState& recv);

// ---------------------------------------------------------------------------
// Sender
// ---------------------------------------------------------------------------

enum class SenderPhase : std::uint8_t { kProbe, kConnected };

struct RateParams {
  double x = 0.2;           // increase threshold
  double k = 2.0;           // increase divisor
  double rate_cap = 488.28125;  // packets/s
};

struct SentInfo {
  std::uint64_t serial = 0;
  SimTime last_sent;
  std::uint32_t transmissions = 0;
};

struct SenderState {
  SenderPhase phase = SenderPhase::kProbe;
  double rate_s = 0.0;  // packets/s
  RateParams params;
  std::map<std::uint64_t, SentInfo> unacked;
  std::set<std::uint64_t> retransmit;
  std::uint64_t next_seq = 0;
  std::uint64_t next_serial = 1;
  std::uint64_t delivered_serial = 0;  // highest send serial known delivered
  std::uint32_t missed_feedback_periods = 0;
  SimTime last_feedback_at;
};

/// Increase by (R - S)/k only when R > S(1 + x); drop straight to R when
/// R < S. The result is clamped to (0, rate_cap].
void update_sender_rate(SenderState& st, double r_feedback);

/// Unacknowledged packets sent at least this long before an ACK that does
/// not cover them are retransmitted, with or without a later delivery.
inline constexpr SimTime kRetransmitTimeout = seconds(1);

struct AckOutcome {
  std::size_t acknowledged = 0;
  std::size_t queued_for_retransmit = 0;
};

/// Prunes SACK-covered packets, queues provably lost gaps for retransmission
/// and applies the carried rate.
AckOutcome sender_on_ack(SenderState& st, const Packet& ack, SimTime now);

/// Next DATA sequence to emit, retransmissions first. Empty when the
/// application is drained and nothing needs resending.
std::optional<std::uint64_t> next_data_seq(SenderState& st, bool app_active);

/// Marks `seq` as (re)sent now and returns its send serial.
std::uint64_t record_send(SenderState& st, std::uint64_t seq, SimTime now);

struct LivenessPolicy {
  bool epoch_paired = true;
  SimTime period = seconds(1);     // receiver epoch, epoch-paired mode
  SimTime watchdog = seconds(3);   // absolute timeout, DRF-paired mode
};

enum class LivenessAction : std::uint8_t { kNone, kRateHalved, kEnterProbe };

/// Epoch-paired: two silent periods halve S, three force the probe phase.
/// DRF-paired: silence of `watchdog` forces the probe phase.
LivenessAction sender_liveness_check(SenderState& st, SimTime now, const LivenessPolicy& policy);

}  // namespace drfsim
