#pragma once

// Monte Carlo rollouts with the same cost accounting as the exact solver:
// cost(x_t) accrues at t = 1..T, decisions are taken at t = 1..T-1.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aoi/model.hpp"
#include "aoi/policies.hpp"

namespace aoi {

struct TrajectoryStep {
  int stage = 1;
  SystemState state;
  Action action;
  TransitionEvent event;
};

struct EpisodeResult {
  std::int64_t total_cost = 0;
  /// Per source: sum over stages of h_n(t), divided by T.
  std::vector<double> aaoi_per_source;
  std::vector<std::int64_t> age_sum_per_source;
  std::uint64_t seed = 0;
  std::optional<std::vector<TrajectoryStep>> trajectory;
};

EpisodeResult run_episode(const SchedulingPolicy& policy, const ModelParams& params,
                          const SystemState& x0, std::uint64_t seed,
                          bool record_trajectory = false);

struct ExperimentSummary {
  std::string policy;
  ModelParams params;
  int replications = 0;
  std::uint64_t base_seed = 0;
  double mean_total_cost = 0.0;
  double stderr_total_cost = 0.0;
  double mean_sum_aaoi = 0.0;
  /// Episode i ran with seed base_seed + i.
  std::vector<std::int64_t> episode_costs;
};

/// `threads` = 0 uses the hardware concurrency. Results do not depend on it.
/// Throws InvalidParams when replications < 2.
ExperimentSummary run_experiment(const SchedulingPolicy& policy, const ModelParams& params,
                                 const SystemState& x0, int replications,
                                 std::uint64_t base_seed, int threads = 0);

struct Improvement {
  double percent = 0.0;  // 100 (mean_B - mean_A) / mean_B
  /// Standard error from the paired per-episode differences.
  double stderr_percent = 0.0;
};

/// Improvement of `a` over baseline `b`. Both must come from the same seeds.
Improvement improvement(const ExperimentSummary& a, const ExperimentSummary& b);

struct PolicyComparison {
  std::vector<ExperimentSummary> summaries;

  /// Improvement of policy i over policy j.
  Improvement improvement_of(std::size_t i, std::size_t j) const {
    return improvement(summaries.at(i), summaries.at(j));
  }
};

/// Common random numbers: episode i of every policy uses seed base_seed + i.
PolicyComparison compare_policies(const std::vector<const SchedulingPolicy*>& policies,
                                  const ModelParams& params, const SystemState& x0,
                                  int replications, std::uint64_t base_seed, int threads = 0);

}  // namespace aoi
