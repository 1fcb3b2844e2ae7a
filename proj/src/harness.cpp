#include "drfsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "drfsim/metrics.hpp"
#include "drfsim/scenario.hpp"

namespace drfsim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_rates(std::ostream& out, const Scenario& sc) {
  out << "tick,flow_id,role,rate_pps\n";
  for (const FlowEndpoints& ep : sc.flows()) {
    for (const RateSample& s : sc.sender(ep.id).log().sender_rate) {
      out << s.t.ticks() << ',' << ep.id << ",sender_S," << fmt(s.rate) << '\n';
    }
    for (const RateSample& s : sc.receiver(ep.id).log().receiver_rate) {
      out << s.t.ticks() << ',' << ep.id << ",receiver_R," << fmt(s.rate) << '\n';
    }
  }
}

void write_feedback(std::ostream& out, const Scenario& sc) {
  out << "tick,flow_id,trigger\n";
  for (const FlowEndpoints& ep : sc.flows()) {
    for (const FeedbackRecord& r : sc.receiver(ep.id).log().feedback) {
      out << r.t.ticks() << ',' << ep.id << ',' << to_string(r.trigger) << '\n';
    }
  }
}

}  // namespace

std::string scenario_id(const ScenarioConfig& cfg) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s-thr%g-v%g-f%u-s%llu", std::string(to_string(cfg.protocol)).c_str(),
                cfg.drf_threshold * 100.0, cfg.speed, cfg.flows, static_cast<unsigned long long>(cfg.seed));
  return buf;
}

RunResult run_scenario(const ScenarioConfig& cfg, const std::optional<TraceOutputs>& traces) {
  ScenarioOptions opts;
  std::ofstream events, energy;
  if (traces) {
    std::filesystem::create_directories(traces->dir);
    events = open_out(traces->dir / "events.csv");
    events << "tick,event_kind,node_id,detail\n";
    energy = open_out(traces->dir / "energy.csv");
    opts.event_trace = &events;
    opts.energy_trace = &energy;
  }

  Scenario sc(cfg, std::move(opts));
  sc.run();

  RunResult res;
  SummaryRow& row = res.row;
  row.scenario_id = scenario_id(cfg);
  row.protocol = cfg.protocol;
  row.threshold_pct = cfg.drf_threshold * 100.0;
  row.speed_mps = cfg.speed;
  row.flows = cfg.flows;
  row.seed = cfg.seed;
  row.duration_s = cfg.duration.seconds();

  double throughput_sum = 0.0;
  double mean_rate_sum = 0.0;
  std::uint64_t delivered = 0;
  for (const FlowEndpoints& ep : sc.flows()) {
    const FlowStats stats = sc.flow_stats(ep.id);
    throughput_sum += throughput(stats);
    delivered += stats.delivered;
    row.acks_sent += stats.acks_sent;
    res.conservation_gap = std::max(res.conservation_gap, std::abs(sc.conservation_gap(ep.id)));

    const FlowLog& rx = sc.receiver(ep.id).log();
    const RateTrace sampled = resample(rx.receiver_rate, ep.start, cfg.duration, kRateSampleStep);
    const RateDynamics dyn = rate_change_events(sampled, cfg.rate_epsilon, cfg.duration);
    row.rate_changes += dyn.changes;
    mean_rate_sum += dyn.mean;
    res.rate_max_deviation = std::max(res.rate_max_deviation, dyn.max_deviation);

    if (cfg.protocol == Protocol::kDrf) res.drf_violations += drf_violations(rx.arrivals, cfg.drf_threshold);
  }
  const double n_flows = static_cast<double>(sc.flows().size());
  row.throughput_pps = throughput_sum / n_flows;
  row.mean_rate_pps = mean_rate_sum / n_flows;
  row.total_energy_j = sc.total_energy();
  row.ack_energy_j = ack_energy_share(sc.channel().log(), cfg.radio);
  const EnergyPerBit epb = energy_per_bit(static_cast<double>(delivered), cfg.data_bytes, row.total_energy_j);
  row.e_joules_per_bit = epb.joules_per_bit;
  row.e_paper_bits_per_joule = epb.paper_ratio;
  row.config_hash = config_hash(cfg);
  row.mobility_hash = sc.mobility().trace_hash(cfg.duration, seconds(1));

  if (traces) {
    auto rates = open_out(traces->dir / "rates.csv");
    write_rates(rates, sc);
    auto feedback = open_out(traces->dir / "feedback.csv");
    write_feedback(feedback, sc);
    auto mob = open_out(traces->dir / "mobility.csv");
    sc.mobility().write_trace(mob, cfg.duration, seconds(1));
    save_config(cfg, traces->dir / "config.ini");
  }
  return res;
}

void write_summary_header(std::ostream& out) {
  out << "scenario_id,protocol,threshold_pct,speed_mps,flows,seed,duration_s,throughput_pps,acks_sent,"
         "rate_changes,mean_rate_pps,total_energy_j,ack_energy_j,e_joules_per_bit,e_paper_bits_per_joule,"
         "config_hash,mobility_hash\n";
}

void write_summary_row(std::ostream& out, const SummaryRow& r) {
  out << r.scenario_id << ',' << to_string(r.protocol) << ',' << fmt(r.threshold_pct) << ',' << fmt(r.speed_mps)
      << ',' << r.flows << ',' << r.seed << ',' << fmt(r.duration_s) << ',' << fmt(r.throughput_pps) << ','
      << r.acks_sent << ',' << r.rate_changes << ',' << fmt(r.mean_rate_pps) << ',' << fmt(r.total_energy_j) << ','
      << fmt(r.ack_energy_j) << ',' << fmt(r.e_joules_per_bit) << ',' << fmt(r.e_paper_bits_per_joule) << ','
      << hex(r.config_hash) << ',' << hex(r.mobility_hash) << '\n';
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  write_summary_header(out);
  for (const SummaryRow& r : rows) write_summary_row(out, r);
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  auto out = open_out(path);
  write_summary(out, rows);
}

SweepAxis parse_axis(std::string_view text) {
  if (text == "thresholds") return SweepAxis::kThresholds;
  if (text == "speeds") return SweepAxis::kSpeeds;
  if (text == "flows") return SweepAxis::kFlows;
  if (text == "protocol") return SweepAxis::kProtocol;
  throw std::invalid_argument("unknown sweep axis '" + std::string(text) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kThresholds: return "thresholds";
    case SweepAxis::kSpeeds: return "speeds";
    case SweepAxis::kFlows: return "flows";
    case SweepAxis::kProtocol: return "protocol";
  }
  return "?";
}

std::vector<ScenarioConfig> sweep_configs(const SweepSpec& spec) {
  std::vector<ScenarioConfig> points;
  switch (spec.axis) {
    case SweepAxis::kThresholds:
      for (double t : kThresholds) {
        ScenarioConfig c = spec.base;
        c.drf_threshold = t;
        points.push_back(c);
      }
      break;
    case SweepAxis::kSpeeds:
      for (double v : kSpeeds) {
        ScenarioConfig c = spec.base;
        c.speed = v;
        points.push_back(c);
      }
      break;
    case SweepAxis::kFlows:
      for (std::uint32_t f : kFlowCounts) {
        ScenarioConfig c = spec.base;
        c.flows = f;
        points.push_back(c);
      }
      break;
    case SweepAxis::kProtocol:
      for (Protocol p : {Protocol::kAtp, Protocol::kDrf}) {
        ScenarioConfig c = spec.base;
        c.protocol = p;
        points.push_back(c);
      }
      break;
  }
  std::vector<ScenarioConfig> out;
  for (const ScenarioConfig& p : points) {
    for (std::uint32_t r = 0; r < spec.replications; ++r) {
      ScenarioConfig c = p;
      c.seed = spec.base.seed + r;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<RunResult> run_all(const std::vector<ScenarioConfig>& configs, unsigned threads,
                               const std::function<void(std::size_t, std::size_t)>& progress) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(1, configs.size()));

  std::vector<RunResult> results(configs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t done = 0;
  std::string error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size() || failed.load()) return;
      try {
        results[i] = run_scenario(configs[i]);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true)) {
          error = "run " + scenario_id(configs[i]) + " failed: " + e.what() + "\n--- config ---\n" +
                  config_text(configs[i]);
        }
        return;
      }
      std::lock_guard lock(mu);
      ++done;
      if (progress) progress(done, configs.size());
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed) throw std::runtime_error(error);
  return results;
}

std::vector<SummaryRow> run_sweep(const SweepSpec& spec) {
  spec.base.validate();
  const auto configs = sweep_configs(spec);
  std::vector<SummaryRow> rows;
  for (RunResult& r : run_all(configs, spec.threads)) rows.push_back(std::move(r.row));
  return rows;
}

ScenarioConfig suite_config(const SuiteSpec& spec, Protocol protocol, double threshold, double speed,
                            std::uint32_t flows, std::uint32_t replication) {
  ScenarioConfig c;
  c.protocol = protocol;
  c.drf_threshold = threshold;
  c.speed = speed;
  c.flows = flows;
  c.duration = spec.duration;
  c.seed = spec.master_seed + replication;
  return c;
}

std::vector<ScenarioConfig> suite_configs(const SuiteSpec& spec) {
  std::vector<ScenarioConfig> out;
  std::map<std::uint64_t, bool> seen;
  auto add = [&](const ScenarioConfig& c) {
    if (seen.emplace(config_hash(c), true).second) out.push_back(c);
  };
  // Threshold grid.
  for (double v : kTableSpeeds) {
    for (std::uint32_t f : kFlowCounts) {
      for (double t : kThresholds) {
        for (std::uint32_t r = 0; r < spec.replications; ++r) add(suite_config(spec, Protocol::kDrf, t, v, f, r));
      }
    }
  }
  // Protocol energy comparison, matched seeds.
  for (double v : kEnergySpeeds) {
    for (std::uint32_t f : kFlowCounts) {
      for (Protocol p : {Protocol::kAtp, Protocol::kDrf}) {
        for (std::uint32_t r = 0; r < spec.replications; ++r) add(suite_config(spec, p, 0.25, v, f, r));
      }
    }
  }
  // Rate dynamics.
  for (double v : kDynamicsSpeeds) {
    for (std::uint32_t r = 0; r < spec.replications; ++r) add(suite_config(spec, Protocol::kDrf, 0.25, v, 1, r));
  }
  return out;
}

const RunResult& SuiteResult::at(const ScenarioConfig& cfg) const {
  auto it = by_hash.find(config_hash(cfg));
  if (it == by_hash.end()) throw std::out_of_range("config not part of the suite: " + scenario_id(cfg));
  return runs[it->second];
}

namespace {

template <class Get>
double mean_over(const SuiteResult& res, const SuiteSpec& spec, Protocol p, double t, double v, std::uint32_t f,
                 Get get) {
  double sum = 0.0;
  for (std::uint32_t r = 0; r < spec.replications; ++r) sum += get(res.at(suite_config(spec, p, t, v, f, r)));
  return sum / spec.replications;
}

void write_tables(const SuiteResult& res, const SuiteSpec& spec, const std::filesystem::path& dir) {
  std::vector<SummaryRow> rows;
  for (const RunResult& r : res.runs) rows.push_back(r.row);
  write_summary(dir / "summary.csv", rows);

  auto t1 = open_out(dir / "table_throughput.csv");
  t1 << "threshold_pct,speed_mps,flows,mean_throughput_pps\n";
  for (double t : kThresholds) {
    for (double v : kTableSpeeds) {
      for (std::uint32_t f : kFlowCounts) {
        t1 << fmt(t * 100) << ',' << fmt(v) << ',' << f << ','
           << fmt(mean_over(res, spec, Protocol::kDrf, t, v, f, [](const RunResult& r) { return r.row.throughput_pps; }))
           << '\n';
      }
    }
  }

  auto t2 = open_out(dir / "table_acks.csv");
  t2 << "threshold_pct,speed_mps,mean_acks_sent\n";
  for (double t : kThresholds) {
    for (double v : kTableSpeeds) {
      t2 << fmt(t * 100) << ',' << fmt(v) << ','
         << fmt(mean_over(res, spec, Protocol::kDrf, t, v, 1,
                          [](const RunResult& r) { return static_cast<double>(r.row.acks_sent); }))
         << '\n';
    }
  }

  auto en = open_out(dir / "energy_comparison.csv");
  en << "protocol,speed_mps,flows,mean_ack_energy_j,mean_total_energy_j,mean_e_joules_per_bit,"
        "mean_e_paper_bits_per_joule\n";
  for (double v : kEnergySpeeds) {
    for (std::uint32_t f : kFlowCounts) {
      for (Protocol p : {Protocol::kAtp, Protocol::kDrf}) {
        en << to_string(p) << ',' << fmt(v) << ',' << f << ','
           << fmt(mean_over(res, spec, p, 0.25, v, f, [](const RunResult& r) { return r.row.ack_energy_j; })) << ','
           << fmt(mean_over(res, spec, p, 0.25, v, f, [](const RunResult& r) { return r.row.total_energy_j; })) << ','
           << fmt(mean_over(res, spec, p, 0.25, v, f, [](const RunResult& r) { return r.row.e_joules_per_bit; }))
           << ','
           << fmt(mean_over(res, spec, p, 0.25, v, f,
                            [](const RunResult& r) { return r.row.e_paper_bits_per_joule; }))
           << '\n';
      }
    }
  }

  auto dyn = open_out(dir / "rate_dynamics.csv");
  dyn << "speed_mps,seed,rate_changes,mean_rate_pps,max_deviation_pps\n";
  for (double v : kDynamicsSpeeds) {
    for (std::uint32_t r = 0; r < spec.replications; ++r) {
      const RunResult& run = res.at(suite_config(spec, Protocol::kDrf, 0.25, v, 1, r));
      dyn << fmt(v) << ',' << run.row.seed << ',' << run.row.rate_changes << ',' << fmt(run.row.mean_rate_pps) << ','
          << fmt(run.rate_max_deviation) << '\n';
    }
  }
}

}  // namespace

SuiteResult paper_suite(const SuiteSpec& spec, const std::optional<std::filesystem::path>& out,
                        const std::function<void(std::size_t, std::size_t)>& progress) {
  SuiteResult res;
  res.configs = suite_configs(spec);
  res.runs = run_all(res.configs, spec.threads, progress);
  for (std::size_t i = 0; i < res.configs.size(); ++i) res.by_hash[config_hash(res.configs[i])] = i;
  if (out) {
    std::filesystem::create_directories(*out);
    write_tables(res, spec, *out);
  }
  return res;
}

}  // namespace drfsim
