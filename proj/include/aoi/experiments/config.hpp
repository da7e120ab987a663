#pragma once

// Experiment configuration: a flat `key = value` file with [sections].
//
//   # comment
//   [model]
//   n_sources = 5          (alias N)
//   n_channels = 1         (alias d)
//   p = 0.65
//   q = uniform:0.5        (or an explicit list: 0.3, 0.4, ...)
//   horizon = 1000         (alias T)
//   initial_state = default  (or g=[0,psi];h=[1,3])
//
//   [grid]                 comma lists or start:stop:step ranges
//   p = 0.1:0.9:0.2
//   n_sources = 5, 25, 100
//   n_channels = 1, 3
//
//   [run]
//   policies = delta, pi, rr
//   replications = 200
//   base_seed = 42
//   rr_mode = work-conserving   (or strict)
//   threads = 0
//   state_cap = 5000000
//
//   [output]
//   path = results.csv
//   format = csv           (or json)
//   header_timestamp = true
//
//   [verify]
//   n_sources, n_channels, q, horizon, gap_p, scaling_p, min_scaling_slope,
//   closure_cases, identity_cases, decomposition_cases, seed, fault (none | success-skips-aging)
//
// Command-line overrides go through apply_setting and win over the file.

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/errors.hpp"
#include "aoi/model.hpp"
#include "aoi/policies.hpp"
#include "aoi/verification.hpp"

namespace aoi::experiments {

class ConfigError : public Error {
 public:
  ConfigError(std::string field, int line, const std::string& message)
      : Error(format(field, line, message)), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  /// 0 when the setting came from the command line.
  int line() const { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& message) {
    std::string where = line > 0 ? "line " + std::to_string(line) + ", " : "";
    return "config error (" + where + "field '" + field + "'): " + message;
  }

  std::string field_;
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// `uniform:<value>` or an explicit per-source vector.
struct QSpec {
  std::optional<double> uniform = 0.5;
  std::vector<double> values;

  static QSpec parse(std::string_view text);
  std::string text() const;
  /// Throws InvalidParams when an explicit vector has the wrong length.
  std::vector<double> expand(int n_sources) const;
};

enum class OutputFormat { Csv, Json };

struct SweepConfig {
  int n_sources = 5;
  int n_channels = 1;
  double p = 0.65;
  QSpec q;
  int horizon = 1000;
  /// Empty means every source starts with g = 0, h = 1.
  std::optional<std::string> initial_state;

  std::vector<double> grid_p;
  std::vector<int> grid_n;
  std::vector<int> grid_d;

  std::vector<std::string> policies{"delta", "pi", "rr"};
  int replications = 200;
  std::uint64_t base_seed = 42;
  RrMode rr_mode = RrMode::WorkConserving;
  int threads = 0;
  std::size_t state_cap = 5'000'000;

  std::string output_path;
  OutputFormat format = OutputFormat::Csv;
  bool header_timestamp = true;

  VerifyOptions verify;
  /// The verify section's q is kept as a spec until its N is known.
  QSpec verify_q;
};

/// Applies one `section.key = value` setting. Throws ConfigError.
void apply_setting(SweepConfig& config, std::string_view section, std::string_view key,
                   std::string_view value, int line = 0);

/// `section.key=value` form used by `--set`.
void apply_override(SweepConfig& config, std::string_view assignment);

SweepConfig parse_config(std::istream& in);
SweepConfig parse_config_text(std::string_view text);
/// Throws IoError when the file cannot be read.
SweepConfig load_config(const std::string& path);

/// Cross-checks fields that depend on one another. Throws ConfigError.
void validate(SweepConfig& config);

struct GridPoint {
  ModelParams params;
  std::string q_spec;
  SystemState x0;
  /// Stable text identifying the point; feeds the per-point seed.
  std::string canonical;
  std::uint64_t seed = 0;
};

/// Grid points in N, d, p nesting order; axes without a grid use the model default.
std::vector<GridPoint> expand_grid(const SweepConfig& config);

/// Grid point with one axis overridden; the others stay at the model defaults.
GridPoint make_point(const SweepConfig& config, int n_sources, int n_channels, double p);

/// FNV-1a over the canonical string, mixed with the base seed.
std::uint64_t point_seed(std::uint64_t base_seed, std::string_view canonical);

}  // namespace aoi::experiments
