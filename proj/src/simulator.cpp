#include "aoi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "aoi/random.hpp"

namespace aoi {

EpisodeResult run_episode(const SchedulingPolicy& policy, const ModelParams& params,
                          const SystemState& x0, std::uint64_t seed, bool record_trajectory) {
  if (x0.size() != static_cast<std::size_t>(params.n_sources)) {
    throw InvalidState("initial state size does not match n_sources");
  }
  EpisodeResult result;
  result.seed = seed;
  result.age_sum_per_source.assign(x0.size(), 0);
  if (record_trajectory) result.trajectory.emplace();

  RandomStream rng(seed);
  SystemState x = x0;
  RRCursor cursor{};
  for (int t = 1; t <= params.horizon; ++t) {
    for (std::size_t n = 0; n < x.size(); ++n) result.age_sum_per_source[n] += x.h()[n];
    if (t == params.horizon) {
      if (record_trajectory) result.trajectory->push_back({t, x, Action{}, TransitionEvent{}});
      break;
    }
    auto step = policy.decide(t, x, cursor);
    cursor = step.cursor;
    auto [next, event] = sample_step(x, step.decision.action, params, rng);
    if (record_trajectory) {
      result.trajectory->push_back({t, x, step.decision.action, std::move(event)});
    }
    x = std::move(next);
  }

  result.aaoi_per_source.reserve(x0.size());
  for (auto sum : result.age_sum_per_source) {
    result.total_cost += sum;
    result.aaoi_per_source.push_back(static_cast<double>(sum) / params.horizon);
  }
  return result;
}

namespace {

int resolve_threads(int threads, int jobs) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(threads, jobs));
}

}  // namespace

ExperimentSummary run_experiment(const SchedulingPolicy& policy, const ModelParams& params,
                                 const SystemState& x0, int replications,
                                 std::uint64_t base_seed, int threads) {
  params.validate();
  if (replications < 2) throw InvalidParams("replications must be >= 2");

  ExperimentSummary summary;
  summary.policy = policy.name();
  summary.params = params;
  summary.replications = replications;
  summary.base_seed = base_seed;
  summary.episode_costs.assign(static_cast<std::size_t>(replications), 0);

  // Each worker fills a strided slice; the reduction below runs in index order.
  const int workers = resolve_threads(threads, replications);
  auto work = [&](int worker) {
    for (int i = worker; i < replications; i += workers) {
      summary.episode_costs[static_cast<std::size_t>(i)] =
          run_episode(policy, params, x0, base_seed + static_cast<std::uint64_t>(i)).total_cost;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  double sum = 0.0;
  for (auto c : summary.episode_costs) sum += static_cast<double>(c);
  const double mean = sum / replications;
  double sq = 0.0;
  for (auto c : summary.episode_costs) sq += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  summary.mean_total_cost = mean;
  summary.stderr_total_cost = std::sqrt(sq / (replications - 1)) / std::sqrt(replications);
  summary.mean_sum_aaoi = mean / params.horizon;
  return summary;
}

Improvement improvement(const ExperimentSummary& a, const ExperimentSummary& b) {
  if (a.episode_costs.size() != b.episode_costs.size() || a.base_seed != b.base_seed) {
    throw InvalidParams("improvement needs runs over the same seeds");
  }
  Improvement out;
  if (b.mean_total_cost == 0.0) return out;
  out.percent = 100.0 * (b.mean_total_cost - a.mean_total_cost) / b.mean_total_cost;
  const auto n = a.episode_costs.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += static_cast<double>(b.episode_costs[i] - a.episode_costs[i]);
  }
  mean /= static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = static_cast<double>(b.episode_costs[i] - a.episode_costs[i]) - mean;
    sq += dev * dev;
  }
  const double se = std::sqrt(sq / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  out.stderr_percent = 100.0 * se / b.mean_total_cost;
  return out;
}

PolicyComparison compare_policies(const std::vector<const SchedulingPolicy*>& policies,
                                  const ModelParams& params, const SystemState& x0,
                                  int replications, std::uint64_t base_seed, int threads) {
  if (policies.size() < 2) throw InvalidParams("comparison needs at least two policies");
  PolicyComparison out;
  for (const auto* policy : policies) {
    out.summaries.push_back(run_experiment(*policy, params, x0, replications, base_seed, threads));
  }
  return out;
}

}  // namespace aoi
