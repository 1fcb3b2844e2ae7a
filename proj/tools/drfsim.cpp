// drfsim command-line entry point: run | sweep | paper-suite.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "drfsim/config.hpp"
#include "drfsim/harness.hpp"

namespace fs = std::filesystem;
using namespace drfsim;

namespace {

void progress(std::size_t done, std::size_t total) {
  if (done == total || done % 10 == 0) std::cerr << "\r" << done << "/" << total << (done == total ? "\n" : "") << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator of rate-based transport over mobile ad hoc networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool traces = false;
  auto* run = app.add_subcommand("run", "Run one scenario and write summary.csv");
  run->add_option("--config", config_path, "Scenario config file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--traces", traces, "Write event, energy, rate, feedback and mobility traces");

  std::string sweep_config;
  std::string axis;
  std::uint32_t replications = 5;
  std::string sweep_out = ".";
  unsigned threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Sweep one axis with replications");
  sweep->add_option("--config", sweep_config, "Base scenario config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "thresholds | speeds | flows | protocol")
      ->required()
      ->check(CLI::IsMember({"thresholds", "speeds", "flows", "protocol"}));
  sweep->add_option("--replications", replications, "Seeds per axis point")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "Output directory");
  sweep->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string suite_out;
  std::uint64_t master_seed = 1;
  unsigned suite_threads = 0;
  auto* suite = app.add_subcommand("paper-suite", "Run the full trend battery");
  suite->add_option("--out", suite_out, "Output directory")->required();
  suite->add_option("--seed", master_seed, "Master seed");
  suite->add_option("--threads", suite_threads, "Worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig cfg = load_config(config_path);
      if (*seed_opt) cfg.seed = seed;
      fs::create_directories(out_dir);
      std::optional<TraceOutputs> tr;
      if (traces) tr = TraceOutputs{fs::path(out_dir) / "traces"};
      RunResult res = run_scenario(cfg, tr);
      write_summary(fs::path(out_dir) / "summary.csv", {res.row});
      write_summary(std::cout, {res.row});
    } else if (*sweep) {
      SweepSpec spec;
      spec.base = load_config(sweep_config);
      spec.axis = parse_axis(axis);
      spec.replications = replications;
      spec.threads = threads;
      fs::create_directories(sweep_out);
      const auto configs = sweep_configs(spec);
      std::cerr << "sweep " << to_string(spec.axis) << ": " << configs.size() << " runs\n";
      for (const auto& c : configs) std::cerr << "  " << scenario_id(c) << '\n';
      std::vector<SummaryRow> rows;
      for (RunResult& r : run_all(configs, threads, progress)) rows.push_back(std::move(r.row));
      write_summary(fs::path(sweep_out) / "summary.csv", rows);
    } else if (*suite) {
      SuiteSpec spec;
      spec.master_seed = master_seed;
      spec.threads = suite_threads;
      std::cerr << "paper-suite: " << suite_configs(spec).size() << " runs\n";
      paper_suite(spec, fs::path(suite_out), progress);
    }
  } catch (const std::exception& e) {
    std::cerr << "drfsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
