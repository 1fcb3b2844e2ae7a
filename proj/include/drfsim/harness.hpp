#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drfsim/config.hpp"

namespace drfsim {

/// One line of summary.csv.
struct SummaryRow {
  std::string scenario_id;
  Protocol protocol = Protocol::kDrf;
  double threshold_pct = 0.0;
  double speed_mps = 0.0;
  std::uint32_t flows = 0;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  double throughput_pps = 0.0;  // mean over flows of delivered / duration
  std::uint64_t acks_sent = 0;  // all flows
  std::uint64_t rate_changes = 0;
  double mean_rate_pps = 0.0;
  double total_energy_j = 0.0;
  double ack_energy_j = 0.0;
  double e_joules_per_bit = 0.0;
  double e_paper_bits_per_joule = 0.0;
  std::uint64_t config_hash = 0;
  std::uint64_t mobility_hash = 0;
};

/// Row plus run diagnostics that do not go into summary.csv.
struct RunResult {
  SummaryRow row;
  std::size_t drf_violations = 0;     // replay of the receivers' arrival logs
  std::int64_t conservation_gap = 0;  // largest |gap| over flows
  double rate_max_deviation = 0.0;
};

std::string scenario_id(const ScenarioConfig& cfg);

/// Interval at which the receiver's collated rate is sampled before counting
/// rate changes.
inline constexpr SimTime kRateSampleStep = seconds(1);

struct TraceOutputs {
  std::filesystem::path dir;  // events.csv, energy.csv, rates.csv, feedback.csv, mobility.csv
};

/// Runs one scenario to its configured duration.
RunResult run_scenario(const ScenarioConfig& cfg, const std::optional<TraceOutputs>& traces = std::nullopt);

void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const SummaryRow& row);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

enum class SweepAxis : std::uint8_t { kThresholds, kSpeeds, kFlows, kProtocol };

SweepAxis parse_axis(std::string_view text);
std::string_view to_string(SweepAxis axis);

struct SweepSpec {
  ScenarioConfig base;
  SweepAxis axis = SweepAxis::kThresholds;
  std::uint32_t replications = 5;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Configs in row order: axis values ascending (atp before drf), then
/// replications with seeds base.seed + r.
std::vector<ScenarioConfig> sweep_configs(const SweepSpec& spec);

/// Runs `configs` on a worker pool and returns results in input order. The
/// first failure aborts with the failing config echoed in the message.
std::vector<RunResult> run_all(const std::vector<ScenarioConfig>& configs, unsigned threads = 0,
                               const std::function<void(std::size_t done, std::size_t total)>& progress = {});

std::vector<SummaryRow> run_sweep(const SweepSpec& spec);

/// The full trend battery: threshold grid, protocol energy comparison and
/// rate dynamics. Runs sharing a config are executed once.
struct SuiteResult {
  std::vector<ScenarioConfig> configs;  // unique, in execution order
  std::vector<RunResult> runs;          // parallel to configs
  std::map<std::uint64_t, std::size_t> by_hash;

  const RunResult& at(const ScenarioConfig& cfg) const;
};

struct SuiteSpec {
  std::uint64_t master_seed = 1;
  std::uint32_t replications = 5;
  SimTime duration = seconds(100);
  unsigned threads = 0;
};

/// Every config the suite needs, unique and in deterministic order.
std::vector<ScenarioConfig> suite_configs(const SuiteSpec& spec);

/// Runs the suite. When `out` is set, writes summary.csv and the aggregate
/// tables into it.
SuiteResult paper_suite(const SuiteSpec& spec, const std::optional<std::filesystem::path>& out = std::nullopt,
                        const std::function<void(std::size_t, std::size_t)>& progress = {});

// Axis values shared by the suite and the acceptance checks.
inline const std::vector<double> kThresholds = {0.15, 0.25, 0.35, 0.50, 0.65, 0.75};
inline const std::vector<double> kSpeeds = {1, 10, 20, 30, 50};
inline const std::vector<std::uint32_t> kFlowCounts = {1, 5, 25};
inline const std::vector<double> kTableSpeeds = {1, 20, 30};
inline const std::vector<double> kEnergySpeeds = {1, 10, 20, 30};
inline const std::vector<double> kDynamicsSpeeds = {1, 10, 30, 50};

ScenarioConfig suite_config(const SuiteSpec& spec, Protocol protocol, double threshold, double speed,
                            std::uint32_t flows, std::uint32_t replication);

}  // namespace drfsim
