#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <memory>
#include <set>
#include <vector>

#include "drfsim/metrics.hpp"
#include "drfsim/transport.hpp"
#include "drfsim/transport_agents.hpp"

using namespace drfsim;

// ---------------------------------------------------------------------------
// Pure operations
// ---------------------------------------------------------------------------

TEST(DelayEstimate, Examples) {
  NodeDelayEstimator e{0.0, 0.75, false};
  e = update_delay_estimate(e, 0.006, 0.0);
  EXPECT_DOUBLE_EQ(e.d_avg, 0.006);
  e.d_avg = 0.004;
  e = update_delay_estimate(e, 0.005, 0.003);
  EXPECT_DOUBLE_EQ(e.d_avg, 0.005);
  e = update_delay_estimate(e, 0.002, 0.003);
  EXPECT_DOUBLE_EQ(e.d_avg, 0.005);
}

TEST(StampCongestion, MaxKeepsLarger) {
  Packet p;
  p.kind = PacketKind::kData;
  p.congestion_delay = 0.005;
  stamp_congestion(p, NodeDelayEstimator{0.003, 0.75, true});
  EXPECT_DOUBLE_EQ(p.congestion_delay, 0.005);
  p.congestion_delay = 0.002;
  stamp_congestion(p, NodeDelayEstimator{0.007, 0.75, true});
  EXPECT_DOUBLE_EQ(p.congestion_delay, 0.007);
  Packet fresh;
  fresh.kind = PacketKind::kProbe;
  stamp_congestion(fresh, NodeDelayEstimator{0.004, 0.75, true});
  EXPECT_DOUBLE_EQ(fresh.congestion_delay, 0.004);
  Packet ack;
  ack.kind = PacketKind::kAckRate;
  stamp_congestion(ack, NodeDelayEstimator{0.004, 0.75, true});
  EXPECT_EQ(ack.congestion_delay, 0.0);
}

TEST(CollateRate, Examples) {
  ReceiverState r;
  EXPECT_DOUBLE_EQ(collate_rate(r, 0.010), 100.0);
  ReceiverState s;
  s.collated_initialized = true;
  s.d_collated = 0.005;
  EXPECT_DOUBLE_EQ(collate_rate(s, 0.005), 200.0);
  ReceiverState c;
  collate_rate(c, 0.050);
  double rate = 0;
  for (int i = 0; i < 200; ++i) rate = collate_rate(c, 0.004);
  EXPECT_NEAR(rate, 250.0, 1e-6);
}

TEST(CollateRate, ZeroDelayClampsToOneTick) {
  ReceiverState r;
  EXPECT_DOUBLE_EQ(collate_rate(r, 0.0), 1e7);
  EXPECT_EQ(r.unstamped, 1u);
}

TEST(SenderRate, Examples) {
  SenderState st;
  st.rate_s = 100;
  update_sender_rate(st, 150);
  EXPECT_DOUBLE_EQ(st.rate_s, 125);
  st.rate_s = 100;
  update_sender_rate(st, 110);
  EXPECT_DOUBLE_EQ(st.rate_s, 100);
  update_sender_rate(st, 120);  // exactly S(1+x) does not increase
  EXPECT_DOUBLE_EQ(st.rate_s, 100);
  update_sender_rate(st, 80);
  EXPECT_DOUBLE_EQ(st.rate_s, 80);
}

TEST(SenderRate, ClampedToCapAndResetsMissedPeriods) {
  SenderState st;
  st.rate_s = 400;
  st.missed_feedback_periods = 2;
  update_sender_rate(st, 1e6);
  EXPECT_DOUBLE_EQ(st.rate_s, st.params.rate_cap);
  EXPECT_EQ(st.missed_feedback_periods, 0u);
}

TEST(EpochFeedback, DueAfterFullPeriodOnceDataSeen) {
  ReceiverState r;
  r.policy.mode = FeedbackMode::kEpochTimer;
  EXPECT_FALSE(epoch_feedback_due(r, seconds(5)));
  r.data_seen = true;
  r.last_ack_at = seconds(2);
  EXPECT_FALSE(epoch_feedback_due(r, seconds(3) - SimTime::from_ticks(1)));
  EXPECT_TRUE(epoch_feedback_due(r, seconds(3)));
}

TEST(DrfFeedback, Boundaries) {
  ReceiverState r;
  EXPECT_TRUE(drf_feedback_due(r, 123.0, false));  // first feedback
  r.feedback_sent = true;
  r.policy.threshold = 1.0;
  r.r_last = 4;
  EXPECT_TRUE(drf_feedback_due(r, 8, false));
  EXPECT_FALSE(drf_feedback_due(r, 7.99, false));
  EXPECT_TRUE(drf_feedback_due(r, 0, false));  // -100% also counts
  r.policy.threshold = 0.25;
  r.r_last = 200;
  EXPECT_FALSE(drf_feedback_due(r, 240, false));
  EXPECT_TRUE(drf_feedback_due(r, 250, false));
  EXPECT_TRUE(drf_feedback_due(r, 150, false));
  EXPECT_FALSE(drf_feedback_due(r, 151, false));
  EXPECT_TRUE(drf_feedback_due(r, 201, true));  // loss forces feedback
}

TEST(DetectLoss, Examples) {
  ReceiverState r;
  for (std::uint64_t s : {0, 1, 2}) EXPECT_FALSE(detect_loss(r, s));
  ReceiverState a = r;
  EXPECT_TRUE(detect_loss(a, 4));
  EXPECT_FALSE(detect_loss(a, 3));  // closes the gap
  ReceiverState b = r;
  EXPECT_FALSE(detect_loss(b, 3));
  bool dup = false;
  EXPECT_FALSE(detect_loss(b, 1, &dup));
  EXPECT_TRUE(dup);
  EXPECT_EQ(b.received.size(), 4u);
  ReceiverState c;
  EXPECT_TRUE(detect_loss(c, 2));  // 0 and 1 missing
}

TEST(BuildSack, Examples) {
  ReceiverState r;
  for (std::uint64_t s : {0, 1, 2, 3}) r.received.insert(s);
  EXPECT_EQ(build_sack(r), (std::vector<SackBlock>{{0, 3}}));
  ReceiverState q;
  for (std::uint64_t s : {0, 1, 2, 4, 5, 7}) q.received.insert(s);
  EXPECT_EQ(build_sack(q), (std::vector<SackBlock>{{0, 2}, {4, 5}, {7, 7}}));
  EXPECT_THROW(build_sack(ReceiverState{}), std::logic_error);
}

TEST(BuildSack, CappedKeepsCumulativeAndMostRecent) {
  ReceiverState r;
  for (std::uint64_t s = 0; s < 40; s += 2) r.received.insert(s);  // 20 singleton blocks
  const auto blocks = build_sack(r);
  ASSERT_EQ(blocks.size(), kMaxSackBlocks);
  EXPECT_EQ(blocks.front(), (SackBlock{0, 0}));
  EXPECT_EQ(blocks.back(), (SackBlock{38, 38}));
  EXPECT_EQ(blocks[1], (SackBlock{26, 26}));
}

TEST(SequenceSet, MergesAndCounts) {
  SequenceSet s;
  for (std::uint64_t v : {5, 3, 4, 10, 0, 1, 2, 9, 11}) EXPECT_TRUE(s.insert(v));
  EXPECT_FALSE(s.insert(4));
  EXPECT_EQ(s.size(), 9u);
  EXPECT_EQ(s.blocks(), (std::vector<SackBlock>{{0, 5}, {9, 11}}));
  EXPECT_TRUE(s.contains(10));
  EXPECT_FALSE(s.contains(7));
  EXPECT_EQ(s.highest(), 11u);
}

namespace {

SenderState sent_through(std::uint64_t last) {
  SenderState st;
  st.phase = SenderPhase::kConnected;
  st.rate_s = 100;
  for (std::uint64_t s = 0; s <= last; ++s) record_send(st, *next_data_seq(st, true), SimTime{});
  return st;
}

Packet ack_with(std::vector<SackBlock> blocks, double rate = 0.0) {
  Packet a;
  a.kind = PacketKind::kAckRate;
  a.sack = std::move(blocks);
  a.rate_feedback = rate;
  return a;
}

}  // namespace

TEST(SenderOnAck, PrunesCoveredPackets) {
  SenderState st = sent_through(14);
  const auto out = sender_on_ack(st, ack_with({{0, 9}}), milliseconds(100));
  EXPECT_EQ(out.acknowledged, 10u);
  EXPECT_EQ(out.queued_for_retransmit, 0u);
  EXPECT_EQ(st.unacked.size(), 5u);
  EXPECT_EQ(st.unacked.begin()->first, 10u);
  EXPECT_TRUE(st.retransmit.empty());
}

TEST(SenderOnAck, GapIsRetransmittedBeforeNewData) {
  SenderState st = sent_through(14);
  const auto out = sender_on_ack(st, ack_with({{0, 4}, {6, 9}}), milliseconds(100));
  EXPECT_EQ(out.queued_for_retransmit, 1u);
  EXPECT_EQ(st.retransmit, (std::set<std::uint64_t>{5}));
  EXPECT_EQ(next_data_seq(st, true), 5u);
  EXPECT_EQ(next_data_seq(st, true), 15u);
}

TEST(SenderOnAck, AppliesRateAndHandlesStaleAcks) {
  SenderState st = sent_through(4);
  sender_on_ack(st, ack_with({{0, 4}}, 150), seconds(1));
  EXPECT_DOUBLE_EQ(st.rate_s, 125);
  EXPECT_EQ(st.last_feedback_at, seconds(1));
  const auto out = sender_on_ack(st, ack_with({{0, 4}}, 90), seconds(2));
  EXPECT_EQ(out.acknowledged, 0u);
  EXPECT_EQ(out.queued_for_retransmit, 0u);
  EXPECT_DOUBLE_EQ(st.rate_s, 90);
}

TEST(SenderOnAck, OldUnprovenGapRetransmittedAfterTimeout) {
  SenderState st = sent_through(3);
  // Packet 1 retransmitted later than 2 and 3 went out, so serial order
  // alone does not prove it lost.
  st.retransmit.insert(1);
  record_send(st, *next_data_seq(st, true), milliseconds(10));
  sender_on_ack(st, ack_with({{0, 0}, {2, 3}}), milliseconds(500));
  EXPECT_TRUE(st.retransmit.empty());
  sender_on_ack(st, ack_with({{0, 0}, {2, 3}}), milliseconds(10) + kRetransmitTimeout);
  EXPECT_EQ(st.retransmit, (std::set<std::uint64_t>{1}));
}

TEST(SenderOnAck, TailRetransmittedAfterTimeout) {
  SenderState st = sent_through(4);
  sender_on_ack(st, ack_with({{0, 2}}), milliseconds(500));
  EXPECT_TRUE(st.retransmit.empty());
  sender_on_ack(st, ack_with({{0, 2}}), kRetransmitTimeout);
  EXPECT_EQ(st.retransmit, (std::set<std::uint64_t>{3, 4}));
}

TEST(NextDataSeq, ConsecutiveAndDrained) {
  SenderState st;
  EXPECT_EQ(next_data_seq(st, true), 0u);
  EXPECT_EQ(next_data_seq(st, true), 1u);
  EXPECT_EQ(next_data_seq(st, false), std::nullopt);
  st.retransmit.insert(0);  // not in unacked: skipped
  EXPECT_EQ(next_data_seq(st, true), 2u);
}

TEST(Liveness, EpochPaired) {
  const LivenessPolicy policy{true, seconds(1), seconds(3)};
  SenderState st;
  st.phase = SenderPhase::kConnected;
  st.rate_s = 200;
  EXPECT_EQ(sender_liveness_check(st, milliseconds(2500), policy), LivenessAction::kRateHalved);
  EXPECT_DOUBLE_EQ(st.rate_s, 100);
  EXPECT_EQ(sender_liveness_check(st, milliseconds(2900), policy), LivenessAction::kNone);
  EXPECT_DOUBLE_EQ(st.rate_s, 100);
  SenderState t;
  t.phase = SenderPhase::kConnected;
  t.rate_s = 200;
  EXPECT_EQ(sender_liveness_check(t, milliseconds(3200), policy), LivenessAction::kEnterProbe);
  EXPECT_EQ(t.phase, SenderPhase::kProbe);
}

TEST(Liveness, DrfWatchdog) {
  const LivenessPolicy policy{false, seconds(1), seconds(3)};
  SenderState st;
  st.phase = SenderPhase::kConnected;
  st.rate_s = 200;
  st.last_feedback_at = seconds(10);
  EXPECT_EQ(sender_liveness_check(st, seconds(11), policy), LivenessAction::kNone);
  EXPECT_EQ(sender_liveness_check(st, milliseconds(12'500), policy), LivenessAction::kNone);
  EXPECT_DOUBLE_EQ(st.rate_s, 200);  // no intermediate decrease
  EXPECT_EQ(sender_liveness_check(st, seconds(13), policy), LivenessAction::kEnterProbe);
}

// ---------------------------------------------------------------------------
// Sender and receiver agents over a loopback link
// ---------------------------------------------------------------------------

namespace {

/// Sender at node 0, receiver at node 1, fixed one-way delay. `stamp`
/// supplies the congestion delay of DATA/PROBE packets; `lose` drops
/// packets on the way.
struct Loop {
  Simulator sim;
  TransportConfig cfg;
  SimTime delay = milliseconds(5);
  std::function<double(const Packet&)> stamp = [](const Packet&) { return 0.004; };
  std::function<bool(const Packet&)> lose = [](const Packet&) { return false; };
  std::unique_ptr<TransportSender> tx;
  std::unique_ptr<TransportReceiver> rx;
  std::vector<Packet> to_receiver;  // everything the sender emitted, in order
  std::vector<SimTime> data_times;

  explicit Loop(FeedbackMode mode, const std::function<void(TransportConfig&)>& tweak = {}) {
    cfg.feedback.mode = mode;
    if (tweak) tweak(cfg);
    tx = std::make_unique<TransportSender>(sim, 0, 0, 1, cfg, [this](Packet p) { forward(std::move(p)); });
    rx = std::make_unique<TransportReceiver>(sim, 0, 1, 0, cfg, [this](Packet p) { backward(std::move(p)); });
  }
  void forward(Packet p) {
    to_receiver.push_back(p);
    if (p.kind == PacketKind::kData) data_times.push_back(sim.now());
    if (lose(p)) return;
    p.congestion_delay = stamp(p);
    sim.schedule_in(delay, EventKind::kGeneric, 1, [this, p] { rx->on_packet(p); });
  }
  void backward(Packet p) {
    if (lose(p)) return;
    sim.schedule_in(delay, EventKind::kGeneric, 0, [this, p] { tx->on_ack(p); });
  }
  void start() { sim.schedule(SimTime{}, EventKind::kFlowStart, 0, [this] { tx->start(); }); }
};

std::size_t count(const std::vector<FeedbackRecord>& fb, FeedbackTrigger t) {
  std::size_t n = 0;
  for (const auto& r : fb) n += r.trigger == t;
  return n;
}

}  // namespace

TEST(Agents, ProbeSetsInitialRateFromStamp) {
  Loop l(FeedbackMode::kDrf);
  l.stamp = [](const Packet&) { return 0.006; };  // worst hop of a 4 ms / 6 ms path
  l.start();
  l.sim.run_until(milliseconds(10));
  EXPECT_EQ(l.tx->state().phase, SenderPhase::kConnected);
  EXPECT_NEAR(l.tx->state().rate_s, 1.0 / 0.006, 1e-9);
  ASSERT_EQ(l.rx->log().feedback.size(), 1u);
  EXPECT_EQ(l.rx->log().feedback[0].trigger, FeedbackTrigger::kFirst);
}

TEST(Agents, IdleSingleHopProbeClampsToCap) {
  Loop l(FeedbackMode::kDrf);
  l.stamp = [](const Packet&) { return 0.0; };
  l.start();
  l.sim.run_until(milliseconds(10));
  EXPECT_DOUBLE_EQ(l.tx->state().rate_s, l.cfg.rate.rate_cap);
}

TEST(Agents, LostProbeRetriedAfterProbeInterval) {
  Loop l(FeedbackMode::kDrf);
  int probes = 0;
  l.lose = [&](const Packet& p) { return p.kind == PacketKind::kProbe && probes++ == 0; };
  l.start();
  l.sim.run_until(seconds(2));
  ASSERT_GE(l.to_receiver.size(), 2u);
  EXPECT_EQ(l.to_receiver[0].kind, PacketKind::kProbe);
  EXPECT_EQ(l.to_receiver[1].kind, PacketKind::kProbe);
  EXPECT_EQ(l.tx->probes_sent(), 2u);
  EXPECT_EQ(l.data_times.front(), seconds(1) + milliseconds(10));
}

TEST(Agents, RateClockedSendGap) {
  Loop l(FeedbackMode::kDrf);
  l.stamp = [](const Packet&) { return 0.005; };  // R = 200 throughout
  l.start();
  l.sim.run_until(seconds(1));
  ASSERT_GT(l.data_times.size(), 100u);
  for (std::size_t i = 1; i < l.data_times.size(); ++i) {
    EXPECT_EQ(l.data_times[i] - l.data_times[i - 1], milliseconds(5));
  }
  // Steady delay, no loss: DRF stays quiet after the first feedback.
  EXPECT_EQ(l.rx->acks_sent(), 1u);
}

TEST(Agents, AckArrivalsDoNotClockTransmissions) {
  // R wobbles between 200 and 230: inside the increase gate, so S stays 200
  // while a 5% DRF threshold keeps acknowledging. The send schedule must
  // match a run whose ACKs are all deleted, up to the watchdog.
  auto run = [](bool drop_acks) {
    Loop l(FeedbackMode::kDrf, [](TransportConfig& c) { c.feedback.threshold = 0.05; });
    int n = 0;
    l.stamp = [&n](const Packet& p) {
      if (p.kind == PacketKind::kProbe) return 0.005;
      return (n++ / 20) % 2 ? 1.0 / 230 : 0.005;
    };
    l.lose = [drop_acks](const Packet& p) { return drop_acks && p.kind == PacketKind::kAckRate && !p.probe_reply; };
    l.start();
    l.sim.run_until(milliseconds(2900));
    return std::make_pair(l.data_times, l.rx->acks_sent());
  };
  const auto [with_acks, acks] = run(false);
  const auto [without, unused] = run(true);
  EXPECT_GT(acks, 3u);
  EXPECT_EQ(with_acks, without);
}

TEST(Agents, EpochCountOverHundredSeconds) {
  Loop l(FeedbackMode::kEpochTimer);
  l.start();
  l.sim.run_until(seconds(100));
  EXPECT_GE(l.rx->acks_sent(), 99u);
  EXPECT_LE(l.rx->acks_sent(), 101u);
}

TEST(Agents, EpochTwoSecondsOverTen) {
  Loop l(FeedbackMode::kEpochTimer, [](TransportConfig& c) { c.feedback.epoch = seconds(2); });
  l.start();
  l.sim.run_until(seconds(10));
  EXPECT_GE(l.rx->acks_sent(), 4u);
  EXPECT_LE(l.rx->acks_sent(), 6u);
}

TEST(Agents, NoDataMeansNoEpochAcks) {
  Loop l(FeedbackMode::kEpochTimer);
  l.lose = [](const Packet& p) { return p.kind == PacketKind::kData; };
  l.start();
  l.sim.run_until(seconds(10));
  EXPECT_EQ(count(l.rx->log().feedback, FeedbackTrigger::kEpoch), 0u);
}

TEST(Agents, EpochSackCadenceCapsLossAcks) {
  Loop l(FeedbackMode::kEpochTimer);
  l.lose = [](const Packet& p) { return p.kind == PacketKind::kData && p.seq % 5 == 3; };
  l.start();
  l.sim.run_until(seconds(10));
  const auto& fb = l.rx->log().feedback;
  const std::size_t loss_acks = count(fb, FeedbackTrigger::kDrfLoss);
  EXPECT_GT(loss_acks, 0u);
  // No two ACKs closer than 20 DATA arrivals unless one is an epoch ACK.
  std::size_t since = 0;
  for (const ArrivalRecord& a : l.rx->log().arrivals) {
    if (a.probe) continue;
    ++since;
    if (a.emitted) {
      EXPECT_GE(since, 20u);
      since = 0;
    }
  }
}

TEST(Agents, DrfFeedbackFollowsTheRule) {
  Loop l(FeedbackMode::kDrf);
  RngStream rng(3, "stamps");
  l.stamp = [&rng](const Packet&) { return rng.uniform(0.002, 0.02); };
  l.lose = [&rng](const Packet& p) { return p.kind == PacketKind::kData && rng.bernoulli(0.02); };
  l.start();
  l.sim.run_until(seconds(20));
  EXPECT_GT(l.rx->acks_sent(), 10u);
  EXPECT_EQ(drf_violations(l.rx->log().arrivals, l.cfg.feedback.threshold), 0u);
  for (const FeedbackRecord& f : l.rx->log().feedback) EXPECT_GT(f.rate, 0.0);
}

TEST(Agents, DrfWatchdogReprobesAfterSilence) {
  Loop l(FeedbackMode::kDrf);
  l.lose = [](const Packet& p) { return p.kind == PacketKind::kAckRate && !p.probe_reply; };
  l.stamp = [](const Packet&) { return 0.005; };
  l.start();
  l.sim.run_until(milliseconds(2990));
  EXPECT_EQ(l.tx->liveness_probes(), 0u);
  EXPECT_EQ(l.tx->probes_sent(), 1u);
  l.sim.run_until(milliseconds(3020));
  EXPECT_EQ(l.tx->liveness_probes(), 1u);
  EXPECT_EQ(l.tx->probes_sent(), 2u);
}

TEST(Agents, EpochLivenessHalvesThenProbes) {
  Loop l(FeedbackMode::kEpochTimer);
  l.lose = [](const Packet& p) { return p.kind == PacketKind::kAckRate && !p.probe_reply; };
  l.stamp = [](const Packet&) { return 0.005; };
  l.start();
  l.sim.run_until(milliseconds(2100));
  EXPECT_DOUBLE_EQ(l.tx->state().rate_s, 100.0);
  l.sim.run_until(milliseconds(3100));
  EXPECT_EQ(l.tx->liveness_probes(), 1u);
}

TEST(Agents, LinkFailureEntersProbePhase) {
  Loop l(FeedbackMode::kDrf);
  l.start();
  l.sim.run_until(milliseconds(500));
  ASSERT_EQ(l.tx->state().phase, SenderPhase::kConnected);
  const auto sent = l.tx->data_sent();
  l.tx->on_link_failure();
  EXPECT_EQ(l.tx->state().phase, SenderPhase::kProbe);
  EXPECT_EQ(l.tx->probes_sent(), 2u);
  EXPECT_EQ(l.tx->data_sent(), sent);
  l.sim.run_until(seconds(1));
  EXPECT_EQ(l.tx->state().phase, SenderPhase::kConnected);
}

TEST(Agents, EveryLostSequenceIsRecoveredExactlyOnce) {
  for (FeedbackMode mode : {FeedbackMode::kDrf, FeedbackMode::kEpochTimer}) {
    Loop l(mode);
    RngStream rng(9, "loss");
    l.lose = [&rng](const Packet& p) { return p.kind != PacketKind::kProbe && rng.bernoulli(0.1); };
    l.start();
    l.sim.run_until(seconds(20));
    l.tx->stop_application();
    l.sim.run_until(seconds(60));
    const auto& st = l.tx->state();
    EXPECT_TRUE(st.unacked.empty());
    EXPECT_EQ(l.rx->delivered(), st.next_seq);
    const auto blocks = l.rx->state().received.blocks();
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_EQ(blocks[0], (SackBlock{0, st.next_seq - 1}));
    EXPECT_GT(l.tx->retransmitted(), 0u);
  }
}
