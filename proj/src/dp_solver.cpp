#include "aoi/dp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "aoi/random.hpp"

namespace aoi {

std::size_t DpKeyHash::operator()(const DpKey& k) const noexcept {
  return static_cast<std::size_t>(
      mix64(SystemStateHash{}(k.state) ^ static_cast<std::uint64_t>(k.cursor.next_index)));
}

DpTable::DpTable(int horizon) : stages_(static_cast<std::size_t>(horizon)) {}

const DpTable::Stage& DpTable::at(int stage) const {
  if (stage < 1 || stage > horizon()) {
    throw StateNotInTable("stage " + std::to_string(stage) + " outside 1.." +
                          std::to_string(horizon()));
  }
  return stages_[static_cast<std::size_t>(stage - 1)];
}

const DpEntry* DpTable::find(int stage, const SystemState& x, RRCursor cursor) const {
  if (stage < 1 || stage > horizon()) return nullptr;
  const auto& s = stages_[static_cast<std::size_t>(stage - 1)];
  const auto it = s.index.find(DpKey{x, cursor});
  return it == s.index.end() ? nullptr : &s.entries[it->second];
}

const DpEntry& DpTable::entry(int stage, const SystemState& x, RRCursor cursor) const {
  const auto* e = find(stage, x, cursor);
  if (e == nullptr) {
    throw StateNotInTable("state " + x.to_string() + " not reached at stage " +
                          std::to_string(stage));
  }
  return *e;
}

std::size_t DpTable::total_size() const {
  std::size_t total = 0;
  for (const auto& s : stages_) total += s.keys.size();
  return total;
}

void DpTable::set_stage(int stage, std::vector<DpKey> keys, std::vector<DpEntry> entries) {
  auto& s = stages_.at(static_cast<std::size_t>(stage - 1));
  s.index.clear();
  s.index.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) s.index.emplace(keys[i], i);
  s.keys = std::move(keys);
  s.entries = std::move(entries);
}

void DpTable::write_debug(std::ostream& out) const {
  char value[64];
  for (int t = 1; t <= horizon(); ++t) {
    const auto& s = at(t);
    for (std::size_t i = 0; i < s.keys.size(); ++i) {
      std::snprintf(value, sizeof value, "%.17g", s.entries[i].value);
      out << t << ' ' << s.keys[i].cursor.next_index << ' ' << s.keys[i].state.to_string() << ' '
          << value << ' ' << (s.entries[i].action ? to_string(*s.entries[i].action) : "-")
          << '\n';
    }
  }
}

namespace {

// Forward closure over stages 1..horizon. `expand(t, key, out)` appends the
// successor keys of a stage-t key to `out` (duplicates allowed).
template <class Expand>
std::vector<std::vector<DpKey>> forward_closure(const DpKey& root, int horizon,
                                                std::size_t cap, Expand expand) {
  std::vector<std::vector<DpKey>> stages;
  stages.reserve(static_cast<std::size_t>(horizon));
  stages.push_back({root});
  std::size_t total = 1;
  std::vector<DpKey> successors;
  for (int t = 1; t < horizon; ++t) {
    std::vector<DpKey> next;
    std::unordered_set<DpKey, DpKeyHash> seen;
    for (const auto& key : stages.back()) {
      successors.clear();
      expand(t, key, successors);
      for (auto& s : successors) {
        if (seen.insert(s).second) {
          next.push_back(std::move(s));
          if (total + next.size() > cap) throw StateSpaceTooLarge(total + next.size(), cap);
        }
      }
    }
    total += next.size();
    stages.push_back(std::move(next));
  }
  return stages;
}

double q_value(const SystemState& x, const Action& a, const ModelParams& params,
               const DpTable& table, int next_stage, RRCursor next_cursor) {
  double expect = 0.0;
  for (const auto& s : enumerate_transitions(x, a, params)) {
    expect += s.probability * table.value(next_stage, s.state, next_cursor);
  }
  return static_cast<double>(cost(x)) + expect;
}

void fill_terminal(DpTable& table, std::vector<DpKey> keys) {
  std::vector<DpEntry> entries;
  entries.reserve(keys.size());
  for (const auto& k : keys) entries.push_back({static_cast<double>(cost(k.state)), std::nullopt});
  table.set_stage(table.horizon(), std::move(keys), std::move(entries));
}

}  // namespace

std::vector<std::vector<SystemState>> reachable_states(const ModelParams& params,
                                                       const SystemState& x0,
                                                       const DpOptions& options) {
  params.validate();
  if (x0.size() != static_cast<std::size_t>(params.n_sources)) {
    throw InvalidState("initial state size does not match n_sources");
  }
  auto stages = forward_closure(DpKey{x0, {}}, params.horizon, options.state_cap,
                                [&](int, const DpKey& key, std::vector<DpKey>& out) {
                                  for (const auto& a : enumerate_actions(key.state, params.n_channels)) {
                                    for (auto& s : enumerate_transitions(key.state, a, params)) {
                                      out.push_back(DpKey{std::move(s.state), {}});
                                    }
                                  }
                                });
  std::vector<std::vector<SystemState>> out;
  out.reserve(stages.size());
  for (auto& stage : stages) {
    std::vector<SystemState> states;
    states.reserve(stage.size());
    for (auto& k : stage) states.push_back(std::move(k.state));
    out.push_back(std::move(states));
  }
  return out;
}

DpTable solve_optimal(const ModelParams& params, const SystemState& x0, const DpOptions& options) {
  auto stages = reachable_states(params, x0, options);
  const int horizon = params.horizon;
  DpTable table(horizon);
  auto to_keys = [](std::vector<SystemState>& states) {
    std::vector<DpKey> keys;
    keys.reserve(states.size());
    for (auto& x : states) keys.push_back(DpKey{std::move(x), {}});
    return keys;
  };
  fill_terminal(table, to_keys(stages.back()));
  for (int t = horizon - 1; t >= 1; --t) {
    auto keys = to_keys(stages[static_cast<std::size_t>(t - 1)]);
    std::vector<DpEntry> entries;
    entries.reserve(keys.size());
    std::vector<double> qs;
    for (const auto& key : keys) {
      const auto actions = enumerate_actions(key.state, params.n_channels);
      qs.clear();
      double best = std::numeric_limits<double>::infinity();
      for (const auto& a : actions) {
        qs.push_back(q_value(key.state, a, params, table, t + 1, {}));
        best = std::min(best, qs.back());
      }
      const double slack = options.tie_tolerance * std::max(1.0, std::abs(best));
      std::size_t pick = 0;
      while (qs[pick] > best + slack) ++pick;
      entries.push_back({qs[pick], actions[pick]});
    }
    table.set_stage(t, std::move(keys), std::move(entries));
  }
  return table;
}

DpTable evaluate_policy(const SchedulingPolicy& policy, const ModelParams& params,
                        const SystemState& x0, const DpOptions& options, RRCursor start) {
  params.validate();
  if (x0.size() != static_cast<std::size_t>(params.n_sources)) {
    throw InvalidState("initial state size does not match n_sources");
  }
  auto stages = forward_closure(DpKey{x0, start}, params.horizon, options.state_cap,
                                [&](int t, const DpKey& key, std::vector<DpKey>& out) {
                                  const auto step = policy.decide(t, key.state, key.cursor);
                                  const RRCursor cursor =
                                      policy.uses_cursor() ? step.cursor : RRCursor{};
                                  for (auto& s : enumerate_transitions(key.state, step.decision.action,
                                                                       params)) {
                                    out.push_back(DpKey{std::move(s.state), cursor});
                                  }
                                });

  DpTable table(params.horizon);
  fill_terminal(table, std::move(stages.back()));
  for (int t = params.horizon - 1; t >= 1; --t) {
    auto& keys = stages[static_cast<std::size_t>(t - 1)];
    std::vector<DpEntry> entries;
    entries.reserve(keys.size());
    for (const auto& key : keys) {
      auto step = policy.decide(t, key.state, key.cursor);
      const RRCursor cursor = policy.uses_cursor() ? step.cursor : RRCursor{};
      const double v = q_value(key.state, step.decision.action, params, table, t + 1, cursor);
      entries.push_back({v, std::move(step.decision.action)});
    }
    table.set_stage(t, std::move(keys), std::move(entries));
  }
  return table;
}

std::int64_t l_delta(const SystemState& x, int n_channels) {
  return age_gap(x, delta_decide(x, n_channels).action);
}

double penultimate_value(const SystemState& x, const ModelParams& params) {
  return 2.0 * static_cast<double>(cost(x)) + static_cast<double>(x.size()) +
         params.p * static_cast<double>(l_delta(x, params.n_channels));
}

BoundConstants bound_constants(int k, double p, int n_channels) {
  if (k < 2) throw InvalidDepth("bound constants need depth k >= 2, got " + std::to_string(k));
  const double pd = success_probs(p, n_channels, 0).p_d;
  const double d = n_channels;
  BoundConstants c{2, (1.0 + pd) * d, 0.0, 2.0 * d, 0.0};
  for (int j = 3; j <= k; ++j) {
    const BoundConstants prev = c;
    c.k = j;
    c.c1 = (1.0 + pd) * prev.c1 + 2.0 * (j - 1) * d;
    c.c2 = (1.0 + pd) * (prev.c1 + prev.c2);
    c.d1 = (1.0 + pd) * prev.d1 + 2.0 * prev.c1 + 2.0 * (j - 1) * d;
    c.d2 = (1.0 + pd) * (prev.d1 + prev.d2) + 2.0 * (prev.c1 + prev.c2);
  }
  return c;
}

GapReport theorem1_gap(const ModelParams& params, const SystemState& x0, const DpOptions& options) {
  const auto optimal = solve_optimal(params, x0, options);
  const auto delta = evaluate_policy(DeltaPolicy(params.n_channels), params, x0, options);

  GapReport r;
  r.p = params.p;
  r.n_channels = params.n_channels;
  r.n_sources = params.n_sources;
  r.horizon = params.horizon;
  r.q = params.q;
  r.v_optimal = optimal.value(1, x0);
  r.v_delta = delta.value(1, x0);
  r.diff = r.v_delta - r.v_optimal;
  r.p_pd = params.p * success_probs(params.p, params.n_channels, 0).p_d;
  if (params.p > 0.0) r.z = r.diff / r.p_pd;
  r.norm_inf_x0 = norm_inf(x0);
  if (params.horizon - 1 >= 2) {
    r.constants = bound_constants(params.horizon - 1, params.p, params.n_channels);
    r.bound = r.p_pd * (r.constants->d1 * r.norm_inf_x0 + r.constants->d2);
  }
  for (int t = 1; t <= params.horizon; ++t) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    const auto& keys = delta.keys(t);
    const auto& entries = delta.entries(t);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const double gap = entries[i].value - optimal.value(t, keys[i].state);
      hi = std::max(hi, gap);
      lo = std::min(lo, gap);
    }
    r.stage_max_gap.push_back(hi);
    r.stage_min_gap.push_back(lo);
  }
  return r;
}

double normalized_gap(const GapReport& report) {
  if (!report.z) throw DegenerateP("normalized gap undefined at p = 0");
  return *report.z;
}

AgeStepResult lemma1_check(const SystemState& x, const Action& a, const ModelParams& params,
                          TransitionFault fault) {
  AgeStepResult r;
  for (const auto& s : enumerate_transitions(x, a, params, fault)) {
    r.lhs += s.probability * static_cast<double>(cost(s.state));
  }
  r.rhs = static_cast<double>(cost(x)) + static_cast<double>(x.size()) +
          params.p * static_cast<double>(age_gap(x, a));
  return r;
}

DeltaSplitResult lemma2_decompose(const SystemState& x, const Action& a, const ModelParams& params) {
  if (packet_count(x) == 0) throw NoAction("no source holds a packet");
  if (!is_work_conserving(x, a, params.n_channels)) {
    throw InvalidAction("action " + to_string(a) + " is not work-conserving for " + x.to_string());
  }
  const int d = params.n_channels;
  const auto probs = success_probs(params.p, d, static_cast<int>(a.size()));
  DeltaSplitResult r;
  r.p_d = probs.p_d;
  r.p_x_d = probs.p_x_d;

  // Raw (W, C) outcomes, split on whether any transfer succeeded.
  const auto n = x.size();
  const auto k = a.size();
  double success_mass = 0.0;
  double success_sum = 0.0;
  TransitionEvent e;
  for (std::uint64_t wm = 0; wm < (std::uint64_t{1} << k); ++wm) {
    e.successes.clear();
    for (std::size_t i = 0; i < k; ++i) {
      if (wm >> i & 1U) e.successes.push_back(a.scheduled[i]);
    }
    for (std::uint64_t cm = 0; cm < (std::uint64_t{1} << n); ++cm) {
      e.arrivals.clear();
      double arrival_prob = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool arrived = cm >> i & 1U;
        if (arrived) e.arrivals.push_back(static_cast<SourceIndex>(i));
        arrival_prob *= arrived ? params.q[i] : 1.0 - params.q[i];
      }
      if (arrival_prob == 0.0) continue;
      const auto next = apply_transition(x, a, e);
      const auto l = static_cast<double>(l_delta(next, d));
      if (wm == 0) {
        // Given no success, W is fixed and C keeps its unconditional law.
        r.u += arrival_prob * l;
      } else {
        const double prob = transition_prob(a, e, params);
        success_mass += prob;
        success_sum += prob * l;
      }
    }
  }
  if (success_mass > 0.0 && r.p_d > 0.0) {
    r.v = (r.p_x_d / r.p_d) * (success_sum / success_mass);
  }
  for (const auto& s : enumerate_transitions(x, a, params)) {
    r.expected += s.probability * static_cast<double>(l_delta(s.state, d));
  }
  return r;
}

}  // namespace aoi
