#pragma once

// Exact finite-horizon solver over the forward-reachable state space, exact
// policy evaluation, and the numeric checks of the optimality-gap results.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

#include "aoi/model.hpp"
#include "aoi/policies.hpp"

namespace aoi {

/// Table key. Memoryless policies and the optimal solver always use cursor 0;
/// round robin is evaluated on the augmented state (x, cursor).
struct DpKey {
  SystemState state;
  RRCursor cursor;

  friend bool operator==(const DpKey&, const DpKey&) = default;
};

struct DpKeyHash {
  std::size_t operator()(const DpKey& k) const noexcept;
};

struct DpEntry {
  double value = 0.0;
  /// Minimizing (or policy) action; empty optional at the terminal stage.
  std::optional<Action> action;
};

/// Stage-indexed values, stages 1..T. Immutable once built.
class DpTable {
 public:
  DpTable() = default;
  explicit DpTable(int horizon);

  int horizon() const { return static_cast<int>(stages_.size()); }

  /// Throws StateNotInTable.
  const DpEntry& entry(int stage, const SystemState& x, RRCursor cursor = {}) const;
  const DpEntry* find(int stage, const SystemState& x, RRCursor cursor = {}) const;
  double value(int stage, const SystemState& x, RRCursor cursor = {}) const {
    return entry(stage, x, cursor).value;
  }

  std::size_t stage_size(int stage) const { return at(stage).keys.size(); }
  std::size_t total_size() const;
  const std::vector<DpKey>& keys(int stage) const { return at(stage).keys; }
  const std::vector<DpEntry>& entries(int stage) const { return at(stage).entries; }

  /// One line per stored (stage, state): `t cursor state value action`.
  void write_debug(std::ostream& out) const;

  // Builder interface used by the solvers.
  void set_stage(int stage, std::vector<DpKey> keys, std::vector<DpEntry> entries);

 private:
  struct Stage {
    std::vector<DpKey> keys;
    std::vector<DpEntry> entries;
    std::unordered_map<DpKey, std::size_t, DpKeyHash> index;
  };
  const Stage& at(int stage) const;

  std::vector<Stage> stages_;
};

struct DpOptions {
  std::size_t state_cap = 5'000'000;
  /// Actions whose Q is within this relative margin of the minimum count as
  /// tied; the lexicographically smallest tied action wins.
  double tie_tolerance = 1e-12;
};

/// Forward closure from x0 under every work-conserving action. Element t-1
/// holds the stage-t set. Throws StateSpaceTooLarge.
std::vector<std::vector<SystemState>> reachable_states(const ModelParams& params,
                                                       const SystemState& x0,
                                                       const DpOptions& options = {});

/// Backward induction: V_T = c, V_t = min_a [c + E V_{t+1}].
DpTable solve_optimal(const ModelParams& params, const SystemState& x0,
                      const DpOptions& options = {});

/// Same recursion with the policy's decision in place of the minimum, over the
/// states the policy reaches from (x0, start).
DpTable evaluate_policy(const SchedulingPolicy& policy, const ModelParams& params,
                        const SystemState& x0, const DpOptions& options = {},
                        RRCursor start = {});

/// min over work-conserving actions of l(x, a).
std::int64_t l_delta(const SystemState& x, int n_channels);

/// 2 sum h + N + p l_delta(x): the value one stage before the horizon.
double penultimate_value(const SystemState& x, const ModelParams& params);

struct BoundConstants {
  int k = 2;
  double c1 = 0.0;
  double c2 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Recursive bound constants at depth k >= 2. Throws InvalidDepth.
BoundConstants bound_constants(int k, double p, int n_channels);

struct GapReport {
  double p = 0.0;
  int n_channels = 1;
  int n_sources = 1;
  int horizon = 1;
  std::vector<double> q;
  double v_optimal = 0.0;  // V*_1(x0)
  double v_delta = 0.0;    // V^delta_1(x0)
  double diff = 0.0;       // v_delta - v_optimal
  double p_pd = 0.0;       // p * p_d
  std::optional<double> z;  // diff / p_pd, only for p > 0
  /// p * p_d * (D1(T-1) * norm_inf(x0) + D2(T-1)); 0 when T <= 2.
  double bound = 0.0;
  Age norm_inf_x0 = 0;
  std::optional<BoundConstants> constants;
  /// Per stage t (index t-1), extreme values of V^delta_t - V*_t over the
  /// states the delta policy reaches.
  std::vector<double> stage_max_gap;
  std::vector<double> stage_min_gap;

  bool bound_holds(double tol = 1e-9) const { return diff <= bound + tol; }
};

GapReport theorem1_gap(const ModelParams& params, const SystemState& x0,
                       const DpOptions& options = {});

/// diff / (p p_d). Throws DegenerateP when p = 0.
double normalized_gap(const GapReport& report);

struct AgeStepResult {
  double lhs = 0.0;  // E[sum h'] by enumeration
  double rhs = 0.0;  // sum h + N + p l(x, a)
};

AgeStepResult lemma1_check(const SystemState& x, const Action& a, const ModelParams& params,
                          TransitionFault fault = TransitionFault::None);

struct DeltaSplitResult {
  double u = 0.0;         // E[l_delta(X') | no success]
  double v = 0.0;         // (p_x^d / p_d) E[l_delta(X') | at least one success]
  double expected = 0.0;  // E[l_delta(X')] over the merged successor law
  double p_x_d = 0.0;
  double p_d = 0.0;
  double mixture() const { return (1.0 - p_x_d) * u + p_d * v; }
};

/// Throws NoAction when no source holds a packet, InvalidAction unless a is
/// work-conserving for x.
DeltaSplitResult lemma2_decompose(const SystemState& x, const Action& a, const ModelParams& params);

}  // namespace aoi
