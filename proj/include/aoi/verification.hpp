#pragma once

// Numeric verification suite: probability closure, the one-step expectation
// identities, the success-probability identity, optimality-gap sign, bound and
// p^2 scaling, and the closed form one stage before the horizon.

#include <cstdint>
#include <string>
#include <vector>

#include "aoi/model.hpp"
#include "json.hpp"

namespace aoi {

enum class CheckStatus { Pass, Fail, NotApplicable };

std::string_view to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  /// Measured quantities and thresholds.
  nlohmann::ordered_json measured = nlohmann::ordered_json::object();
  std::string detail;
};

struct VerifyOptions {
  /// Instance used by the exact-DP checks.
  int n_sources = 2;
  int n_channels = 1;
  std::vector<double> q{0.5, 0.5};
  int horizon = 6;
  std::vector<double> gap_p{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> scaling_p{0.02, 0.04, 0.08, 0.16};
  double min_scaling_slope = 1.8;

  int closure_cases = 1000;
  int identity_cases = 1000;
  int decomposition_cases = 500;
  std::uint64_t seed = 42;
  std::size_t state_cap = 5'000'000;

  TransitionFault fault = TransitionFault::None;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  nlohmann::ordered_json to_json() const;
};

VerifyReport run_verification(const VerifyOptions& options);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace aoi
