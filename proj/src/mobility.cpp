#include "drfsim/mobility.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

namespace drfsim {

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

SimTime WaypointState::arrival_time() const {
  if (speed <= 0.0) return SimTime::max();
  double ticks = std::ceil(length() / speed * SimTime::kTicksPerSecond);
  return depart_time + SimTime::from_ticks(std::max<std::int64_t>(1, static_cast<std::int64_t>(ticks)));
}

Position position_at(const WaypointState& leg, SimTime t) {
  if (leg.speed <= 0.0 || t <= leg.depart_time) return leg.origin;
  const double len = leg.length();
  const double travelled = leg.speed * (t - leg.depart_time).seconds();
  if (travelled >= len) return leg.target;
  const double f = travelled / len;
  return {leg.origin.x + f * (leg.target.x - leg.origin.x), leg.origin.y + f * (leg.target.y - leg.origin.y)};
}

WaypointState next_leg(const WaypointState& current, const Grid& grid, RngStream& rng) {
  WaypointState next;
  next.origin = current.target;
  next.depart_time = current.arrival_time();
  next.speed = current.speed;
  next.target.x = rng.uniform(0.0, grid.width);
  next.target.y = rng.uniform(0.0, grid.height);
  return next;
}

MobilityModel MobilityModel::random_waypoint(std::size_t nodes, Grid grid, double speed, std::uint64_t seed) {
  MobilityModel m;
  m.grid_ = grid;
  m.legs_.resize(nodes);
  m.rngs_.reserve(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    RngStream& rng = m.rngs_.emplace_back(seed, "mobility", i);
    WaypointState first;
    first.origin = {rng.uniform(0.0, grid.width), rng.uniform(0.0, grid.height)};
    first.speed = speed;
    first.target = first.origin;
    if (speed > 0.0) first.target = {rng.uniform(0.0, grid.width), rng.uniform(0.0, grid.height)};
    m.legs_[i].push_back(first);
  }
  return m;
}

MobilityModel MobilityModel::fixed(std::vector<Position> positions, Grid grid) {
  MobilityModel m;
  m.grid_ = grid;
  m.legs_.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    m.rngs_.emplace_back(0, "fixed", i);
    m.legs_[i].push_back(WaypointState{positions[i], positions[i], SimTime{}, 0.0});
  }
  return m;
}

void MobilityModel::extend(NodeId node, SimTime t) {
  auto& legs = legs_[node];
  while (legs.back().speed > 0.0 && legs.back().arrival_time() <= t) {
    legs.push_back(next_leg(legs.back(), grid_, rngs_[node]));
  }
}

Position MobilityModel::position(NodeId node, SimTime t) {
  extend(node, t);
  const auto& legs = legs_[node];
  // Last leg departing at or before t.
  auto it = std::upper_bound(legs.begin(), legs.end(), t,
                             [](SimTime v, const WaypointState& leg) { return v < leg.depart_time; });
  if (it != legs.begin()) --it;
  return position_at(*it, t);
}

std::vector<Position> MobilityModel::snapshot(SimTime t) {
  std::vector<Position> out(size());
  for (NodeId i = 0; i < size(); ++i) out[i] = position(i, t);
  return out;
}

std::uint64_t MobilityModel::trace_hash(SimTime end, SimTime step) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  for (SimTime t{}; t <= end; t += step) {
    for (NodeId i = 0; i < size(); ++i) {
      Position p = position(i, t);
      mix(std::bit_cast<std::uint64_t>(p.x));
      mix(std::bit_cast<std::uint64_t>(p.y));
    }
  }
  return h;
}

void MobilityModel::write_trace(std::ostream& out, SimTime end, SimTime step) {
  out << "tick,node_id,x,y\n";
  char buf[96];
  for (SimTime t{}; t <= end; t += step) {
    for (NodeId i = 0; i < size(); ++i) {
      Position p = position(i, t);
      std::snprintf(buf, sizeof buf, "%lld,%u,%.6f,%.6f\n", static_cast<long long>(t.ticks()), i, p.x, p.y);
      out << buf;
    }
  }
}

}  // namespace drfsim
