#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "drfsim/channel.hpp"
#include "drfsim/mobility.hpp"
#include "drfsim/transport_agents.hpp"

namespace drfsim {

enum class Protocol : std::uint8_t { kAtp, kDrf };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

/// Everything needed to reproduce one run. Defaults describe the reference
/// topology: 50 nodes on a 500 m x 500 m grid, 200 m / 500 m ranges,
/// 2 Mb/s, one flow for 100 s.
struct ScenarioConfig {
  // [scenario]
  Protocol protocol = Protocol::kDrf;
  std::uint64_t seed = 1;
  std::uint32_t node_count = 50;
  Grid grid;
  double speed = 1.0;  // m/s
  std::uint32_t flows = 1;
  SimTime duration = seconds(100);
  SimTime flow_start_window = milliseconds(100);

  // [radio]
  RadioParams radio;
  std::uint32_t queue_capacity = 50;
  double loss_rate = 0.0;  // injected per-hop loss probability

  // [packets]
  std::uint32_t data_bytes = 512;
  std::uint32_t ack_bytes = 40;
  std::uint32_t probe_bytes = 40;
  std::uint32_t elfn_bytes = 32;
  std::uint32_t control_bytes = 32;

  // [transport]
  double x = 0.2;
  double k = 2.0;
  double alpha = 0.75;
  double alpha_r = 0.75;
  SimTime epoch = seconds(1);
  double drf_threshold = 0.25;
  std::uint32_t sack_cadence = 20;
  SimTime probe_interval = seconds(1);
  SimTime drf_watchdog = seconds(3);

  // [metrics]
  SimTime energy_sample_interval = seconds(1);
  double rate_epsilon = 0.05;

  /// bitrate / (8 * data_bytes), packets/s.
  double rate_cap() const { return radio.bitrate / (8.0 * data_bytes); }
  TransportConfig transport() const;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : std::runtime_error(what), key_(std::move(key)) {}
  /// Offending key when the error came from validation, else empty.
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Parses `[section]` headers and `key = value` lines; `#` and `;` start
/// comments. Missing keys keep their defaults. Unknown keys, malformed
/// values and invalid settings raise ConfigError with the line number.
ScenarioConfig parse_config(std::istream& in, std::string_view origin = "<input>");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical text form: every key, fixed order, doubles at 17 significant
/// digits, so parse(save(c)) == c.
std::string config_text(const ScenarioConfig& cfg);
void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path);

/// FNV-1a over the canonical text.
std::uint64_t config_hash(const ScenarioConfig& cfg);

}  // namespace drfsim
