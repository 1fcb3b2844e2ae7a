#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "drfsim/rng.hpp"
#include "drfsim/sim_time.hpp"

namespace drfsim {

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

double distance(Position a, Position b);

struct Grid {
  double width = 500.0;
  double height = 500.0;
  bool contains(Position p) const { return p.x >= 0 && p.x <= width && p.y >= 0 && p.y <= height; }
};

/// One straight random-waypoint leg.
struct WaypointState {
  Position origin;
  Position target;
  SimTime depart_time;
  double speed = 0.0;  // m/s

  double length() const { return distance(origin, target); }
  /// First tick at which the node sits on `target`. Never for speed 0.
  SimTime arrival_time() const;
};

/// Linear interpolation along the leg, clamped at the target.
Position position_at(const WaypointState& leg, SimTime t);

/// Zero-pause successor of `current`: departs from its target at its arrival
/// time toward a point drawn uniformly over the grid.
WaypointState next_leg(const WaypointState& current, const Grid& grid, RngStream& rng);

/// Per-node random waypoint motion, or a fixed layout for scripted tests.
///
/// Every node draws from its own stream, so a node's path does not depend on
/// the order in which other nodes are queried. Legs are generated lazily and
/// kept, which makes position() a pure function of (node, t).
class MobilityModel {
 public:
  static MobilityModel random_waypoint(std::size_t nodes, Grid grid, double speed, std::uint64_t seed);
  static MobilityModel fixed(std::vector<Position> positions, Grid grid = {});

  std::size_t size() const { return legs_.size(); }
  const Grid& grid() const { return grid_; }

  Position position(NodeId node, SimTime t);
  std::vector<Position> snapshot(SimTime t);

  /// Legs of `node` generated so far (at least up to the latest query).
  const std::vector<WaypointState>& legs(NodeId node) const { return legs_[node]; }

  /// Hash of all positions sampled every `step` on [0, end]; equal hashes
  /// mean matched topologies across runs.
  std::uint64_t trace_hash(SimTime end, SimTime step);
  void write_trace(std::ostream& out, SimTime end, SimTime step);

 private:
  MobilityModel() = default;
  void extend(NodeId node, SimTime t);

  Grid grid_;
  std::vector<std::vector<WaypointState>> legs_;
  std::vector<RngStream> rngs_;
};

}  // namespace drfsim
