#pragma once

#include <vector>

#include "drfsim/sim_time.hpp"
#include "drfsim/transport.hpp"

namespace drfsim {

struct RateSample {
  SimTime t;
  double rate = 0.0;  // packets/s
};

using RateTrace = std::vector<RateSample>;

struct FeedbackRecord {
  SimTime t;
  FeedbackTrigger trigger = FeedbackTrigger::kEpoch;
  double rate = 0.0;
};

/// One packet seen by the receiver, with the feedback decision it produced.
struct ArrivalRecord {
  SimTime t;
  bool probe = false;
  std::uint64_t seq = 0;
  double stamped_delay = 0.0;
  double collated_rate = 0.0;
  bool loss = false;
  bool emitted = false;
  FeedbackTrigger trigger = FeedbackTrigger::kEpoch;
};

struct FlowLog {
  RateTrace sender_rate;    // S after every change
  RateTrace receiver_rate;  // collated R after every arrival
  std::vector<FeedbackRecord> feedback;
  std::vector<ArrivalRecord> arrivals;
};

}  // namespace drfsim
