#include "drfsim/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace drfsim {

double throughput(const FlowStats& stats) {
  if (!(stats.duration > 0.0)) return 0.0;
  return static_cast<double>(stats.delivered) / stats.duration;
}

EnergyPerBit energy_per_bit(double packets, double bytes_per_packet, double energy_joules) {
  const double bits = packets * bytes_per_packet * 8.0;
  if (!(bits > 0.0) || !(energy_joules > 0.0)) return {};
  return {bits / energy_joules, energy_joules / bits};
}

RateDynamics rate_change_events(std::span<const RateSample> trace, double epsilon, SimTime end) {
  RateDynamics out;
  if (trace.empty()) return out;
  if (end < trace.back().t) end = trace.back().t;

  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double prev = trace[i - 1].rate;
    const double cur = trace[i].rate;
    const double rel = prev != 0.0 ? std::fabs(cur - prev) / std::fabs(prev) : (cur != 0.0 ? 1.0 : 0.0);
    if (rel >= epsilon) ++out.changes;
  }

  const double span = (end - trace.front().t).seconds();
  if (span <= 0.0) {
    out.mean = trace.back().rate;
  } else {
    double weighted = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const SimTime until = i + 1 < trace.size() ? trace[i + 1].t : end;
      weighted += trace[i].rate * (until - trace[i].t).seconds();
    }
    out.mean = weighted / span;
  }
  for (const RateSample& s : trace) out.max_deviation = std::max(out.max_deviation, std::fabs(s.rate - out.mean));
  return out;
}

RateTrace resample(std::span<const RateSample> trace, SimTime start, SimTime end, SimTime step) {
  RateTrace out;
  std::size_t i = 0;
  for (SimTime t = start; t <= end; t += step) {
    while (i < trace.size() && trace[i].t <= t) ++i;
    if (i == 0) continue;
    out.push_back({t, trace[i - 1].rate});
  }
  return out;
}

std::array<double, kPacketKindCount> energy_by_kind(std::span<const TxRecord> log, const RadioParams& radio) {
  std::array<double, kPacketKindCount> out{};
  for (const TxRecord& r : log) {
    const double airtime = (r.end - r.start).seconds();
    double e = radio.tx_power * airtime;
    if (r.outcome == TxOutcome::kDelivered || r.outcome == TxOutcome::kVirtual) e += radio.rx_power * airtime;
    out[static_cast<std::size_t>(r.kind)] += e;
  }
  return out;
}

double ack_energy_share(std::span<const TxRecord> log, const RadioParams& radio) {
  return energy_by_kind(log, radio)[static_cast<std::size_t>(PacketKind::kAckRate)];
}

std::size_t drf_violations(std::span<const ArrivalRecord> arrivals, double threshold) {
  std::size_t violations = 0;
  bool have_last = false;
  double r_last = 0.0;
  for (const ArrivalRecord& a : arrivals) {
    if (a.probe) {
      // Probe replies restart the feedback baseline.
      if (!a.emitted) ++violations;
      have_last = true;
      r_last = a.collated_rate;
      continue;
    }
    const bool changed = have_last && std::fabs(a.collated_rate - r_last) >= threshold * r_last;
    const bool must = !have_last || a.loss || changed;
    if (a.emitted != must) ++violations;
    if (a.emitted) {
      const bool label_ok = !have_last ? a.trigger == FeedbackTrigger::kFirst
                                       : (changed ? a.trigger == FeedbackTrigger::kDrfChange
                                                  : a.trigger == FeedbackTrigger::kDrfLoss);
      if (!label_ok) ++violations;
      have_last = true;
      r_last = a.collated_rate;
    }
  }
  return violations;
}

}  // namespace drfsim
