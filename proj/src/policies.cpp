#include "aoi/policies.hpp"

#include <algorithm>
#include <numeric>

#include "aoi/dp_solver.hpp"

namespace aoi {

namespace {

// Picks the min(N_x, d) holders with the smallest score; ties by index.
PolicyDecision rank_and_pick(const SystemState& x, int n_channels, std::vector<double> scores) {
  auto holders = sources_with_packets(x);
  const auto k = std::min(holders.size(), static_cast<std::size_t>(n_channels));
  std::stable_sort(holders.begin(), holders.end(), [&](SourceIndex a, SourceIndex b) {
    return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
  });
  holders.resize(k);
  return {Action::from_indices(std::move(holders)), std::move(scores)};
}

}  // namespace

PolicyDecision delta_decide(const SystemState& x, int n_channels) {
  std::vector<double> scores(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (!x.g()[n].is_empty()) scores[n] = static_cast<double>(x.g()[n].value() - x.h()[n]);
  }
  return rank_and_pick(x, n_channels, std::move(scores));
}

PolicyDecision pi_decide(const SystemState& x, int n_channels) {
  std::vector<double> scores(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (!x.g()[n].is_empty()) scores[n] = -static_cast<double>(x.h()[n]);
  }
  return rank_and_pick(x, n_channels, std::move(scores));
}

RrStep rr_decide(RRCursor cursor, const SystemState& x, int n_channels, RrMode mode) {
  const int n = static_cast<int>(x.size());
  const int start = ((cursor.next_index % n) + n) % n;
  std::vector<SourceIndex> picked;
  if (mode == RrMode::Strict) {
    const int span = std::min(n_channels, n);
    for (int i = 0; i < span; ++i) {
      const int idx = (start + i) % n;
      if (!x.g(idx).is_empty()) picked.push_back(idx);
    }
    return {{Action::from_indices(std::move(picked)), std::nullopt},
            RRCursor{(start + n_channels) % n}};
  }
  const auto k = static_cast<std::size_t>(std::min(packet_count(x), n_channels));
  int next = start;
  for (int i = 0; i < n && picked.size() < k; ++i) {
    const int idx = (start + i) % n;
    if (!x.g(idx).is_empty()) {
      picked.push_back(idx);
      next = (idx + 1) % n;
    }
  }
  return {{Action::from_indices(std::move(picked)), std::nullopt}, RRCursor{next}};
}

PolicyDecision dp_policy_decide(const DpTable& table, int stage, const SystemState& x) {
  const auto& entry = table.entry(stage, x);
  if (entry.action) return {*entry.action, std::nullopt};
  // Terminal stage: no decision is taken, report the trivial one.
  return {Action{}, std::nullopt};
}

SchedulingPolicy::Step DeltaPolicy::decide(int, const SystemState& x, RRCursor cursor) const {
  return {delta_decide(x, n_channels_), cursor};
}

SchedulingPolicy::Step PartialInfoPolicy::decide(int, const SystemState& x,
                                                 RRCursor cursor) const {
  return {pi_decide(x, n_channels_), cursor};
}

SchedulingPolicy::Step RoundRobinPolicy::decide(int, const SystemState& x,
                                                RRCursor cursor) const {
  auto step = rr_decide(cursor, x, n_channels_, mode_);
  return {std::move(step.decision), step.cursor};
}

SchedulingPolicy::Step DpPolicy::decide(int stage, const SystemState& x, RRCursor cursor) const {
  return {dp_policy_decide(*table_, stage, x), cursor};
}

bool is_policy_name(std::string_view name) {
  return std::find(std::begin(kPolicyNames), std::end(kPolicyNames), name) !=
         std::end(kPolicyNames);
}

std::unique_ptr<SchedulingPolicy> make_policy(std::string_view name, const ModelParams& params,
                                              const SystemState& x0, RrMode rr_mode) {
  if (name == "delta") return std::make_unique<DeltaPolicy>(params.n_channels);
  if (name == "pi") return std::make_unique<PartialInfoPolicy>(params.n_channels);
  if (name == "rr") return std::make_unique<RoundRobinPolicy>(params.n_channels, rr_mode);
  if (name == "rr-strict") return std::make_unique<RoundRobinPolicy>(params.n_channels, RrMode::Strict);
  if (name == "optimal") {
    auto table = std::make_shared<const DpTable>(solve_optimal(params, x0));
    return std::make_unique<DpPolicy>(std::move(table));
  }
  throw InvalidParams("unknown policy '" + std::string(name) + "'");
}

}  // namespace aoi
