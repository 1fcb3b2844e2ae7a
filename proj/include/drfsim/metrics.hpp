#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "drfsim/channel.hpp"
#include "drfsim/flow_log.hpp"

namespace drfsim {

struct FlowStats {
  std::uint64_t sent = 0;           // DATA handed to the network, retransmissions included
  std::uint64_t delivered = 0;      // distinct sequence numbers at the receiver
  std::uint64_t retransmitted = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t dropped = 0;        // lost in the network or discarded as duplicate
  std::uint64_t in_flight = 0;      // queued, on the air or awaiting a route at the end
  double duration = 0.0;            // seconds
};

/// delivered / duration in packets per second.
double throughput(const FlowStats& stats);

struct EnergyPerBit {
  double paper_ratio = 0.0;     // n * p * 8 / es  (bits per joule)
  double joules_per_bit = 0.0;  // es / (n * p * 8)
};

/// Both readings of the energy/bit metric; zero when n, p or es is zero.
EnergyPerBit energy_per_bit(double packets, double bytes_per_packet, double energy_joules);

struct RateDynamics {
  std::size_t changes = 0;
  double mean = 0.0;           // time-weighted
  double max_deviation = 0.0;  // max |sample - mean|
};

/// Counts consecutive sample pairs whose relative change is >= epsilon.
/// The last sample is held until `end` (defaults to the last timestamp).
RateDynamics rate_change_events(std::span<const RateSample> trace, double epsilon = 0.05,
                                SimTime end = SimTime::from_ticks(-1));

/// Zero-order-hold resampling of a trace at start, start+step, ... <= end.
/// Instants before the first sample are skipped.
RateTrace resample(std::span<const RateSample> trace, SimTime start, SimTime end, SimTime step);

/// Energy of every logged transmission split by packet kind (tx plus rx of
/// the frames that were received).
std::array<double, kPacketKindCount> energy_by_kind(std::span<const TxRecord> log, const RadioParams& radio);

/// Joules spent sending and receiving ACK+Rate frames.
double ack_energy_share(std::span<const TxRecord> log, const RadioParams& radio);

/// Replays a DRF receiver's arrival log and counts feedback decisions that
/// disagree with the trigger rule. Tracks r_last from the log alone.
std::size_t drf_violations(std::span<const ArrivalRecord> arrivals, double threshold);

}  // namespace drfsim
