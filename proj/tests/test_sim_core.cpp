#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <vector>

#include "drfsim/rng.hpp"
#include "drfsim/sim_time.hpp"
#include "drfsim/simulator.hpp"

using namespace drfsim;

TEST(SimTime, TickArithmetic) {
  EXPECT_EQ(seconds(1).ticks(), 10'000'000);
  EXPECT_EQ(milliseconds(3).ticks(), 30'000);
  EXPECT_EQ(microseconds(5).ticks(), 50);
  EXPECT_EQ((seconds(2) - milliseconds(500)).ticks(), 15'000'000);
  EXPECT_EQ(milliseconds(1) * 7, milliseconds(7));
  EXPECT_DOUBLE_EQ(milliseconds(250).seconds(), 0.25);
}

TEST(SimTime, FromSecondsRoundsToNearestTick) {
  EXPECT_EQ(SimTime::from_seconds(1.0 / 200).ticks(), 50'000);
  EXPECT_EQ(SimTime::from_seconds(0.00000004).ticks(), 0);
  EXPECT_EQ(SimTime::from_seconds(0.00000006).ticks(), 1);
  EXPECT_THROW(SimTime::from_seconds(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(SimTime, ExactConversionRejectsSubTickValues) {
  EXPECT_EQ(SimTime::from_seconds_exact(0.0000025).ticks(), 25);
  EXPECT_EQ(SimTime::from_seconds_exact(100).ticks(), 1'000'000'000);
  EXPECT_THROW(SimTime::from_seconds_exact(0.00000015), std::invalid_argument);
}

TEST(SplitMix64, ReferenceOutput) {
  // Published first outputs for seed 0.
  SplitMix64 m(0);
  EXPECT_EQ(m.next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(m.next(), 0x6E789E6AA1B965F4ull);
  EXPECT_EQ(m.next(), 0x06C45D188009454Full);
}

TEST(Fnv1a, ReferenceOutput) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(RngStream, SameTripleSameSequence) {
  RngStream a(42, "mobility", 3), b(42, "mobility", 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(RngStream, StreamsAreIndependentByLabelIndexAndSeed) {
  std::set<std::uint64_t> firsts;
  firsts.insert(RngStream(1, "mobility", 0).next());
  firsts.insert(RngStream(1, "mobility", 1).next());
  firsts.insert(RngStream(1, "jitter", 0).next());
  firsts.insert(RngStream(2, "mobility", 0).next());
  EXPECT_EQ(firsts.size(), 4u);
}

TEST(RngStream, DistributionsStayInRange) {
  RngStream r(7, "test");
  std::vector<int> hist(10, 0);
  for (int i = 0; i < 100'000; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = r.below(10);
    ASSERT_LT(k, 10u);
    ++hist[k];
    const double v = r.uniform(-3.0, 5.0);
    ASSERT_GE(v, -3.0);
    ASSERT_LT(v, 5.0);
  }
  // Loose uniformity check: each bucket within 5% of 10 000.
  for (int h : hist) EXPECT_NEAR(h, 10'000, 500);
  EXPECT_EQ(r.below(0), 0u);
  EXPECT_EQ(r.below(1), 0u);
}

TEST(Simulator, FiresInTimeThenInsertionOrder) {
  Simulator sim;
  std::vector<int> order;
  sim.schedule(milliseconds(5), EventKind::kGeneric, 0, [&] { order.push_back(3); });
  sim.schedule(milliseconds(1), EventKind::kGeneric, 0, [&] { order.push_back(1); });
  sim.schedule(milliseconds(5), EventKind::kGeneric, 0, [&] { order.push_back(4); });
  sim.schedule(milliseconds(1), EventKind::kGeneric, 0, [&] { order.push_back(2); });
  sim.run_until(seconds(1));
  EXPECT_EQ(order, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(sim.now(), seconds(1));
  EXPECT_EQ(sim.events_fired(), 4u);
}

TEST(Simulator, SameTickEventsScheduledDuringRunFireAfterQueuedOnes) {
  Simulator sim;
  std::vector<int> order;
  sim.schedule(milliseconds(1), EventKind::kGeneric, 0, [&] {
    order.push_back(1);
    sim.schedule(sim.now(), EventKind::kGeneric, 0, [&] { order.push_back(3); });
  });
  sim.schedule(milliseconds(1), EventKind::kGeneric, 0, [&] { order.push_back(2); });
  sim.run_until(milliseconds(1));
  EXPECT_EQ(order, (std::vector<int>{1, 2, 3}));
}

TEST(Simulator, RunUntilStopsAtBoundaryInclusive) {
  Simulator sim;
  int fired = 0;
  sim.schedule(milliseconds(10), EventKind::kGeneric, 0, [&] { ++fired; });
  sim.schedule(milliseconds(11), EventKind::kGeneric, 0, [&] { ++fired; });
  sim.run_until(milliseconds(10));
  EXPECT_EQ(fired, 1);
  EXPECT_EQ(sim.pending(), 1u);
  sim.run_until(milliseconds(20));
  EXPECT_EQ(fired, 2);
}

TEST(Simulator, SchedulingIntoThePastThrows) {
  Simulator sim;
  sim.run_until(seconds(1));
  EXPECT_THROW(sim.schedule(milliseconds(999), EventKind::kGeneric, 0, [] {}), std::logic_error);
  EXPECT_NO_THROW(sim.schedule(seconds(1), EventKind::kGeneric, 0, [] {}));
}

TEST(Simulator, TraceLinesAndNotes) {
  std::ostringstream out;
  Simulator sim;
  sim.set_trace(&out);
  sim.schedule(milliseconds(2), EventKind::kSenderTick, 4, [&] { sim.note("route_found", 4, "0-4"); }, 9);
  sim.run_until(milliseconds(2));
  EXPECT_EQ(out.str(), "20000,sender_tick,4,9\n20000,route_found,4,0-4\n");
}

TEST(Simulator, IdenticalSchedulesGiveIdenticalTraces) {
  auto trace = [] {
    std::ostringstream out;
    Simulator sim;
    sim.set_trace(&out);
    RngStream r(5, "events");
    for (int i = 0; i < 200; ++i) {
      sim.schedule(SimTime::from_ticks(static_cast<std::int64_t>(r.below(1000))), EventKind::kGeneric,
                   static_cast<NodeId>(i), [] {}, static_cast<std::uint64_t>(i));
    }
    sim.run_until(seconds(1));
    return out.str();
  };
  EXPECT_EQ(trace(), trace());
}
