#include "aoi/experiments/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aoi/random.hpp"

namespace aoi::experiments {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  while (true) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return items;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

// Parsing helpers report failures through a plain message; callers attach the
// field name and line.
struct BadValue {
  std::string message;
};

template <class T>
T parse_number(std::string_view text) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw BadValue{"cannot parse '" + std::string(text) + "' as a number"};
  }
  return value;
}

double parse_probability(std::string_view text) {
  const double v = parse_number<double>(text);
  if (!(v >= 0.0 && v <= 1.0)) throw BadValue{"probability " + std::string(trim(text)) + " outside [0,1]"};
  return v;
}

int parse_positive(std::string_view text) {
  const int v = parse_number<int>(text);
  if (v < 1) throw BadValue{"expected a positive integer, got " + std::string(trim(text))};
  return v;
}

bool parse_bool(std::string_view text) {
  const auto v = lower(trim(text));
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw BadValue{"expected true/false, got '" + v + "'"};
}

// `a, b, c` or `start:stop:step`.
std::vector<double> parse_double_grid(std::string_view text) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos && text.find(',') == std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw BadValue{"range must be start:stop:step"};
    const double start = parse_number<double>(text.substr(0, c1));
    const double stop = parse_number<double>(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_number<double>(text.substr(c2 + 1));
    if (!(step > 0.0) || stop < start) throw BadValue{"range needs step > 0 and stop >= start"};
    std::vector<double> out;
    for (int i = 0;; ++i) {
      const double v = std::round((start + i * step) * 1e12) / 1e12;
      if (v > stop + 1e-9) break;
      out.push_back(v);
    }
    return out;
  }
  std::vector<double> out;
  for (auto item : split_list(text)) out.push_back(parse_number<double>(item));
  if (out.empty()) throw BadValue{"empty list"};
  return out;
}

std::vector<int> parse_int_grid(std::string_view text) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos && text.find(',') == std::string_view::npos) {
    std::vector<int> out;
    for (double v : parse_double_grid(text)) {
      if (v != std::floor(v)) throw BadValue{"integer range produced " + shortest(v)};
      out.push_back(static_cast<int>(v));
    }
    return out;
  }
  std::vector<int> out;
  for (auto item : split_list(text)) out.push_back(parse_number<int>(item));
  if (out.empty()) throw BadValue{"empty list"};
  return out;
}

std::vector<double> parse_probability_grid(std::string_view text) {
  auto out = parse_double_grid(text);
  for (double v : out) {
    if (!(v >= 0.0 && v <= 1.0)) throw BadValue{"probability " + shortest(v) + " outside [0,1]"};
  }
  return out;
}

std::vector<int> parse_positive_grid(std::string_view text) {
  auto out = parse_int_grid(text);
  for (int v : out) {
    if (v < 1) throw BadValue{"expected positive integers, got " + std::to_string(v)};
  }
  return out;
}

std::string canonical_key(std::string_view section, std::string_view key) {
  const auto k = lower(key);
  if (k == "n") return "n_sources";
  if (k == "d") return "n_channels";
  if (k == "t") return "horizon";
  if (section == "run" && k == "seed") return "base_seed";
  return k;
}

}  // namespace

QSpec QSpec::parse(std::string_view text) {
  text = trim(text);
  QSpec spec;
  if (text.starts_with("uniform:")) {
    spec.uniform = parse_probability(text.substr(8));
    return spec;
  }
  spec.uniform.reset();
  for (auto item : split_list(text)) spec.values.push_back(parse_probability(item));
  if (spec.values.empty()) throw BadValue{"q needs uniform:<value> or a list"};
  return spec;
}

std::string QSpec::text() const {
  if (uniform) return "uniform:" + shortest(*uniform);
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += shortest(values[i]);
  }
  return out;
}

std::vector<double> QSpec::expand(int n_sources) const {
  if (uniform) return std::vector<double>(static_cast<std::size_t>(n_sources), *uniform);
  if (values.size() != static_cast<std::size_t>(n_sources)) {
    throw InvalidParams("q lists " + std::to_string(values.size()) + " values but N = " +
                        std::to_string(n_sources));
  }
  return values;
}

void apply_setting(SweepConfig& c, std::string_view section_in, std::string_view key_in,
                   std::string_view value, int line) {
  const auto section = lower(trim(section_in));
  const auto key = canonical_key(section, trim(key_in));
  const auto field = section + "." + key;
  value = trim(value);
  try {
    if (section == "model") {
      if (key == "n_sources") return void(c.n_sources = parse_positive(value));
      if (key == "n_channels") return void(c.n_channels = parse_positive(value));
      if (key == "p") return void(c.p = parse_probability(value));
      if (key == "q") return void(c.q = QSpec::parse(value));
      if (key == "horizon") return void(c.horizon = parse_positive(value));
      if (key == "initial_state") {
        if (lower(value) == "default") {
          c.initial_state.reset();
        } else {
          c.initial_state = std::string(value);
        }
        return;
      }
    } else if (section == "grid") {
      if (key == "p") return void(c.grid_p = parse_probability_grid(value));
      if (key == "n_sources") return void(c.grid_n = parse_positive_grid(value));
      if (key == "n_channels") return void(c.grid_d = parse_positive_grid(value));
    } else if (section == "run") {
      if (key == "policies") {
        c.policies.clear();
        for (auto item : split_list(value)) c.policies.emplace_back(lower(item));
        return;
      }
      if (key == "replications") return void(c.replications = parse_number<int>(value));
      if (key == "base_seed") return void(c.base_seed = parse_number<std::uint64_t>(value));
      if (key == "rr_mode") {
        const auto v = lower(value);
        if (v == "work-conserving") return void(c.rr_mode = RrMode::WorkConserving);
        if (v == "strict") return void(c.rr_mode = RrMode::Strict);
        throw BadValue{"rr_mode must be work-conserving or strict"};
      }
      if (key == "threads") return void(c.threads = parse_number<int>(value));
      if (key == "state_cap") return void(c.state_cap = parse_number<std::size_t>(value));
    } else if (section == "output") {
      if (key == "path") return void(c.output_path = std::string(value));
      if (key == "format") {
        const auto v = lower(value);
        if (v == "csv") return void(c.format = OutputFormat::Csv);
        if (v == "json") return void(c.format = OutputFormat::Json);
        throw BadValue{"format must be csv or json"};
      }
      if (key == "header_timestamp") return void(c.header_timestamp = parse_bool(value));
    } else if (section == "verify") {
      auto& v = c.verify;
      if (key == "n_sources") return void(v.n_sources = parse_positive(value));
      if (key == "n_channels") return void(v.n_channels = parse_positive(value));
      if (key == "q") return void(c.verify_q = QSpec::parse(value));
      if (key == "horizon") return void(v.horizon = parse_positive(value));
      if (key == "gap_p") return void(v.gap_p = parse_probability_grid(value));
      if (key == "scaling_p") return void(v.scaling_p = parse_probability_grid(value));
      if (key == "min_scaling_slope") return void(v.min_scaling_slope = parse_number<double>(value));
      if (key == "closure_cases") return void(v.closure_cases = parse_positive(value));
      if (key == "identity_cases") return void(v.identity_cases = parse_positive(value));
      if (key == "decomposition_cases") return void(v.decomposition_cases = parse_positive(value));
      if (key == "fault") {
        const auto f = lower(value);
        if (f == "none") return void(v.fault = TransitionFault::None);
        if (f == "success-skips-aging") return void(v.fault = TransitionFault::SuccessSkipsAging);
        throw BadValue{"fault must be none or success-skips-aging"};
      }
    } else {
      throw ConfigError(field, line, "unknown section '" + section + "'");
    }
  } catch (const BadValue& bad) {
    throw ConfigError(field, line, bad.message);
  }
  throw ConfigError(field, line, "unknown key");
}

void apply_override(SweepConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto lhs = trim(assignment.substr(0, eq));
  const auto dot = lhs.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos) {
    throw ConfigError(std::string(lhs), 0, "override must look like section.key=value");
  }
  apply_setting(config, lhs.substr(0, dot), lhs.substr(dot + 1), assignment.substr(eq + 1), 0);
}

SweepConfig parse_config(std::istream& in) {
  SweepConfig config;
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(std::string(text), line, "unterminated section header");
      section = lower(trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(std::string(text), line, "expected key = value");
    if (section.empty()) throw ConfigError(std::string(trim(text.substr(0, eq))), line, "setting outside a section");
    apply_setting(config, section, text.substr(0, eq), text.substr(eq + 1), line);
  }
  return config;
}

SweepConfig parse_config_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void validate(SweepConfig& c) {
  if (c.policies.empty()) throw ConfigError("run.policies", 0, "policy list is empty");
  for (const auto& name : c.policies) {
    if (!is_policy_name(name)) throw ConfigError("run.policies", 0, "unknown policy '" + name + "'");
  }
  if (c.replications < 2) throw ConfigError("run.replications", 0, "need at least 2 replications");
  if (c.threads < 0) throw ConfigError("run.threads", 0, "threads must be >= 0");

  const auto ns = c.grid_n.empty() ? std::vector<int>{c.n_sources} : c.grid_n;
  for (int n : ns) {
    try {
      (void)c.q.expand(n);
    } catch (const InvalidParams& e) {
      throw ConfigError("model.q", 0, e.what());
    }
    if (c.initial_state) {
      try {
        const auto x0 = SystemState::parse(*c.initial_state);
        if (x0.size() != static_cast<std::size_t>(n)) {
          throw ConfigError("model.initial_state", 0,
                            "initial state has " + std::to_string(x0.size()) +
                                " sources but N = " + std::to_string(n));
        }
      } catch (const InvalidState& e) {
        throw ConfigError("model.initial_state", 0, e.what());
      }
    }
  }
  try {
    c.verify.q = c.verify_q.expand(c.verify.n_sources);
  } catch (const InvalidParams& e) {
    throw ConfigError("verify.q", 0, e.what());
  }
  c.verify.seed = c.base_seed;
  c.verify.state_cap = c.state_cap;
}

std::uint64_t point_seed(std::uint64_t base_seed, std::string_view canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(base_seed, h);
}

GridPoint make_point(const SweepConfig& c, int n_sources, int n_channels, double p) {
  GridPoint point;
  point.params.n_sources = n_sources;
  point.params.n_channels = n_channels;
  point.params.p = p;
  point.params.q = c.q.expand(n_sources);
  point.params.horizon = c.horizon;
  point.params.validate();
  point.q_spec = c.q.text();
  point.x0 = c.initial_state ? SystemState::parse(*c.initial_state) : SystemState::fresh(n_sources);
  point.canonical = "N=" + std::to_string(n_sources) + ";d=" + std::to_string(n_channels) +
                    ";p=" + shortest(p) + ";T=" + std::to_string(c.horizon) + ";q=" + point.q_spec +
                    ";x0=" + (c.initial_state ? point.x0.to_string() : std::string("default"));
  point.seed = point_seed(c.base_seed, point.canonical);
  return point;
}

std::vector<GridPoint> expand_grid(const SweepConfig& c) {
  const auto ns = c.grid_n.empty() ? std::vector<int>{c.n_sources} : c.grid_n;
  const auto ds = c.grid_d.empty() ? std::vector<int>{c.n_channels} : c.grid_d;
  const auto ps = c.grid_p.empty() ? std::vector<double>{c.p} : c.grid_p;
  std::vector<GridPoint> points;
  for (int n : ns) {
    for (int d : ds) {
      for (double p : ps) points.push_back(make_point(c, n, d, p));
    }
  }
  return points;
}

}  // namespace aoi::experiments
