#include "drfsim/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <vector>

namespace drfsim {

std::string_view to_string(Protocol p) { return p == Protocol::kAtp ? "atp" : "drf"; }

Protocol parse_protocol(std::string_view text) {
  if (text == "atp") return Protocol::kAtp;
  if (text == "drf") return Protocol::kDrf;
  throw ConfigError("protocol must be atp or drf, got '" + std::string(text) + "'");
}

TransportConfig ScenarioConfig::transport() const {
  TransportConfig t;
  t.feedback.mode = protocol == Protocol::kAtp ? FeedbackMode::kEpochTimer : FeedbackMode::kDrf;
  t.feedback.epoch = epoch;
  t.feedback.threshold = drf_threshold;
  t.feedback.sack_cadence = sack_cadence;
  t.rate.x = x;
  t.rate.k = k;
  t.rate.rate_cap = rate_cap();
  t.alpha_r = alpha_r;
  t.data_bytes = data_bytes;
  t.ack_bytes = ack_bytes;
  t.probe_bytes = probe_bytes;
  t.probe_interval = probe_interval;
  t.drf_watchdog = drf_watchdog;
  return t;
}

namespace {

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(std::string(key) + ": " + what, key);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view text) {
  std::string s(text);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view text) {
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

SimTime parse_duration(std::string_view text) {
  try {
    return SimTime::from_seconds_exact(parse_double(text));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(ScenarioConfig&, std::string_view)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

#define DRF_DOUBLE(sec, name, member)                                                            \
  Field {                                                                                        \
    sec, name, [](ScenarioConfig& c, std::string_view v) { c.member = parse_double(v); },       \
        [](const ScenarioConfig& c) { return format_double(c.member); }                          \
  }
#define DRF_UINT(sec, name, member, type)                                                        \
  Field {                                                                                        \
    sec, name, [](ScenarioConfig& c, std::string_view v) { c.member = parse_int<type>(v); },    \
        [](const ScenarioConfig& c) { return std::to_string(c.member); }                         \
  }
#define DRF_TIME(sec, name, member)                                                              \
  Field {                                                                                        \
    sec, name, [](ScenarioConfig& c, std::string_view v) { c.member = parse_duration(v); },     \
        [](const ScenarioConfig& c) { return format_double(c.member.seconds()); }                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"scenario", "protocol",
            [](ScenarioConfig& c, std::string_view v) { c.protocol = parse_protocol(v); },
            [](const ScenarioConfig& c) { return std::string(to_string(c.protocol)); }},
      DRF_UINT("scenario", "seed", seed, std::uint64_t),
      DRF_UINT("scenario", "node_count", node_count, std::uint32_t),
      DRF_DOUBLE("scenario", "grid_width", grid.width),
      DRF_DOUBLE("scenario", "grid_height", grid.height),
      DRF_DOUBLE("scenario", "speed", speed),
      DRF_UINT("scenario", "flows", flows, std::uint32_t),
      DRF_TIME("scenario", "duration", duration),
      DRF_TIME("scenario", "flow_start_window", flow_start_window),

      DRF_DOUBLE("radio", "tx_range", radio.tx_range),
      DRF_DOUBLE("radio", "interference_range", radio.interference_range),
      DRF_DOUBLE("radio", "bitrate", radio.bitrate),
      DRF_TIME("radio", "prop_delay", radio.prop_delay),
      DRF_DOUBLE("radio", "tx_power", radio.tx_power),
      DRF_DOUBLE("radio", "rx_power", radio.rx_power),
      DRF_UINT("radio", "queue_capacity", queue_capacity, std::uint32_t),
      DRF_DOUBLE("radio", "loss_rate", loss_rate),

      DRF_UINT("packets", "data_bytes", data_bytes, std::uint32_t),
      DRF_UINT("packets", "ack_bytes", ack_bytes, std::uint32_t),
      DRF_UINT("packets", "probe_bytes", probe_bytes, std::uint32_t),
      DRF_UINT("packets", "elfn_bytes", elfn_bytes, std::uint32_t),
      DRF_UINT("packets", "control_bytes", control_bytes, std::uint32_t),

      DRF_DOUBLE("transport", "x", x),
      DRF_DOUBLE("transport", "k", k),
      DRF_DOUBLE("transport", "alpha", alpha),
      DRF_DOUBLE("transport", "alpha_r", alpha_r),
      DRF_TIME("transport", "epoch", epoch),
      DRF_DOUBLE("transport", "drf_threshold", drf_threshold),
      DRF_UINT("transport", "sack_cadence", sack_cadence, std::uint32_t),
      DRF_TIME("transport", "probe_interval", probe_interval),
      DRF_TIME("transport", "drf_watchdog", drf_watchdog),

      DRF_TIME("metrics", "energy_sample_interval", energy_sample_interval),
      DRF_DOUBLE("metrics", "rate_epsilon", rate_epsilon),
  };
  return table;
}

#undef DRF_DOUBLE
#undef DRF_UINT
#undef DRF_TIME

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(node_count >= 2, "node_count", "need at least 2 nodes");
  require(grid.width > 0, "grid_width", "must be positive");
  require(grid.height > 0, "grid_height", "must be positive");
  require(speed >= 0, "speed", "must be >= 0");
  require(flows >= 1, "flows", "must be >= 1");
  require(duration > SimTime{}, "duration", "must be positive");
  require(flow_start_window >= SimTime{}, "flow_start_window", "must be >= 0");
  try {
    radio.validate();
  } catch (const std::invalid_argument& e) {
    // RadioParams messages start with the field name.
    const std::string msg = e.what();
    throw ConfigError(msg, msg.substr(0, msg.find(' ')));
  }
  require(queue_capacity >= 1, "queue_capacity", "must be >= 1");
  require(loss_rate >= 0 && loss_rate < 1, "loss_rate", "must be in [0, 1)");
  require(data_bytes > 0, "data_bytes", "must be positive");
  require(ack_bytes > 0, "ack_bytes", "must be positive");
  require(probe_bytes > 0, "probe_bytes", "must be positive");
  require(elfn_bytes > 0, "elfn_bytes", "must be positive");
  require(control_bytes > 0, "control_bytes", "must be positive");
  require(x >= 0, "x", "must be >= 0");
  require(k >= 1, "k", "must be >= 1");
  require(alpha >= 0 && alpha < 1, "alpha", "must be in [0, 1)");
  require(alpha_r >= 0 && alpha_r < 1, "alpha_r", "must be in [0, 1)");
  require(epoch > SimTime{}, "epoch", "must be positive");
  require(drf_threshold > 0, "drf_threshold", "must be positive");
  require(probe_interval > SimTime{}, "probe_interval", "must be positive");
  require(drf_watchdog > SimTime{}, "drf_watchdog", "must be positive");
  require(energy_sample_interval > SimTime{}, "energy_sample_interval", "must be positive");
  require(rate_epsilon > 0, "rate_epsilon", "must be positive");
}

ScenarioConfig parse_config(std::istream& in, std::string_view origin) {
  ScenarioConfig cfg;
  std::string section = "scenario";
  std::string raw;
  int line_no = 0;
  std::map<std::string, int> line_of;
  auto fail = [&](const std::string& what) -> ConfigError {
    return ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const auto& t = fields();
      if (std::none_of(t.begin(), t.end(), [&](const Field& f) { return section == f.section; })) {
        throw fail("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw fail("expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& t = fields();
    auto it = std::find_if(t.begin(), t.end(), [&](const Field& f) { return section == f.section && key == f.key; });
    if (it == t.end()) throw fail("unknown key '" + std::string(key) + "' in [" + section + "]");
    line_of[std::string(key)] = line_no;
    try {
      it->set(cfg, value);
    } catch (const ConfigError& e) {
      throw fail(std::string(key) + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    auto at = line_of.find(e.key());
    if (at == line_of.end()) throw ConfigError(std::string(origin) + ": " + e.what(), e.key());
    throw ConfigError(std::string(origin) + ":" + std::to_string(at->second) + ": " + e.what(), e.key());
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

std::string config_text(const ScenarioConfig& cfg) {
  std::ostringstream out;
  std::string_view section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << '\n';
  }
  return out.str();
}

void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << config_text(cfg);
}

std::uint64_t config_hash(const ScenarioConfig& cfg) { return fnv1a(config_text(cfg)); }

}  // namespace drfsim
