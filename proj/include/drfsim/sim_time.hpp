#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace drfsim {

/// Simulation time as an integer count of 100 ns ticks since start.
///
/// 100 ns is fine enough to hold every configured duration exactly
/// (the 2.5 us channel delay is 25 ticks) while an int64 still spans
/// ~29 000 years of simulated time.
class SimTime {
 public:
  static constexpr std::int64_t kTicksPerSecond = 10'000'000;

  constexpr SimTime() = default;

  static constexpr SimTime from_ticks(std::int64_t ticks) { return SimTime(ticks); }

  /// Nearest tick. Use for derived intervals such as 1/rate.
  static SimTime from_seconds(double seconds) {
    if (!std::isfinite(seconds)) {
      throw std::invalid_argument("SimTime: non-finite duration");
    }
    return SimTime(static_cast<std::int64_t>(std::llround(seconds * kTicksPerSecond)));
  }

  /// Like from_seconds() but rejects values that are not a whole number of
  /// ticks. Configured durations go through here.
  static SimTime from_seconds_exact(double seconds) {
    SimTime t = from_seconds(seconds);
    double back = static_cast<double>(t.ticks_) / kTicksPerSecond;
    if (std::fabs(back - seconds) > 1e-9 * std::max(1.0, std::fabs(seconds))) {
      throw std::invalid_argument("SimTime: " + std::to_string(seconds) +
                                  " s is not a multiple of the 100 ns tick");
    }
    return t;
  }

  static constexpr SimTime max() { return SimTime(std::numeric_limits<std::int64_t>::max()); }

  constexpr std::int64_t ticks() const { return ticks_; }
  constexpr double seconds() const { return static_cast<double>(ticks_) / kTicksPerSecond; }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime& operator+=(SimTime o) {
    ticks_ += o.ticks_;
    return *this;
  }
  constexpr SimTime& operator-=(SimTime o) {
    ticks_ -= o.ticks_;
    return *this;
  }
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime(a.ticks_ + b.ticks_); }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime(a.ticks_ - b.ticks_); }
  friend constexpr SimTime operator*(SimTime a, std::int64_t n) { return SimTime(a.ticks_ * n); }

 private:
  constexpr explicit SimTime(std::int64_t ticks) : ticks_(ticks) {}
  std::int64_t ticks_ = 0;
};

inline constexpr SimTime seconds(std::int64_t s) { return SimTime::from_ticks(s * SimTime::kTicksPerSecond); }
inline constexpr SimTime milliseconds(std::int64_t ms) { return SimTime::from_ticks(ms * 10'000); }
inline constexpr SimTime microseconds(std::int64_t us) { return SimTime::from_ticks(us * 10); }

using NodeId = std::uint32_t;
using FlowId = std::uint32_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

}  // namespace drfsim
