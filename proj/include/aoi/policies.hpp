#pragma once

// Scheduling policies behind one decision interface.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/model.hpp"

namespace aoi {

class DpTable;

struct PolicyDecision {
  Action action;
  /// The per-source quantity the policy ranked by (lower is preferred), when
  /// the policy ranks sources at all. Indexed by source; EMPTY sources hold 0.
  std::optional<std::vector<double>> scores;
};

/// Where the next round-robin scan starts.
struct RRCursor {
  int next_index = 0;

  friend bool operator==(RRCursor, RRCursor) = default;
};

enum class RrMode { WorkConserving, Strict };

/// Schedules the min(N_x, d) holders with the smallest g - h (largest h - g).
/// Ties go to lower source indices.
PolicyDecision delta_decide(const SystemState& x, int n_channels);

/// Schedules the min(N_x, d) holders with the largest destination age h.
PolicyDecision pi_decide(const SystemState& x, int n_channels);

struct RrStep {
  PolicyDecision decision;
  RRCursor cursor;
};

/// Work-conserving: scan cyclically from the cursor, taking holders until
/// min(N_x, d) are picked; the cursor moves past the last pick (unchanged when
/// nothing is picked). Strict: take the next d indices cyclically, keep the
/// holders among them, advance the cursor by d.
RrStep rr_decide(RRCursor cursor, const SystemState& x, int n_channels,
                 RrMode mode = RrMode::WorkConserving);

/// Stored minimizing action for (stage, x). Throws StateNotInTable.
PolicyDecision dp_policy_decide(const DpTable& table, int stage, const SystemState& x);

/// Common interface used by the simulator and the exact evaluator. Policies
/// that carry memory expose it through the cursor; memoryless ones return it
/// unchanged.
class SchedulingPolicy {
 public:
  virtual ~SchedulingPolicy() = default;

  virtual std::string name() const = 0;

  struct Step {
    PolicyDecision decision;
    RRCursor cursor;
  };

  /// `stage` is 1-based.
  virtual Step decide(int stage, const SystemState& x, RRCursor cursor) const = 0;

  virtual bool uses_cursor() const { return false; }
};

class DeltaPolicy final : public SchedulingPolicy {
 public:
  explicit DeltaPolicy(int n_channels) : n_channels_(n_channels) {}
  std::string name() const override { return "delta"; }
  Step decide(int stage, const SystemState& x, RRCursor cursor) const override;

 private:
  int n_channels_;
};

class PartialInfoPolicy final : public SchedulingPolicy {
 public:
  explicit PartialInfoPolicy(int n_channels) : n_channels_(n_channels) {}
  std::string name() const override { return "pi"; }
  Step decide(int stage, const SystemState& x, RRCursor cursor) const override;

 private:
  int n_channels_;
};

class RoundRobinPolicy final : public SchedulingPolicy {
 public:
  RoundRobinPolicy(int n_channels, RrMode mode) : n_channels_(n_channels), mode_(mode) {}
  std::string name() const override {
    return mode_ == RrMode::Strict ? "rr-strict" : "rr";
  }
  Step decide(int stage, const SystemState& x, RRCursor cursor) const override;
  bool uses_cursor() const override { return true; }

 private:
  int n_channels_;
  RrMode mode_;
};

/// Replays the argmin actions of a solved optimal table.
class DpPolicy final : public SchedulingPolicy {
 public:
  explicit DpPolicy(std::shared_ptr<const DpTable> table) : table_(std::move(table)) {}
  std::string name() const override { return "optimal"; }
  Step decide(int stage, const SystemState& x, RRCursor cursor) const override;
  const DpTable& table() const { return *table_; }

 private:
  std::shared_ptr<const DpTable> table_;
};

/// Names accepted by the CLI and config files.
inline constexpr std::string_view kPolicyNames[] = {"delta", "pi", "rr", "rr-strict", "optimal"};

bool is_policy_name(std::string_view name);

/// Builds a policy by name. `optimal` solves the exact DP from x0 and so may
/// throw StateSpaceTooLarge. `rr` follows `rr_mode`; `rr-strict` is always strict.
std::unique_ptr<SchedulingPolicy> make_policy(std::string_view name, const ModelParams& params,
                                              const SystemState& x0,
                                              RrMode rr_mode = RrMode::WorkConserving);

}  // namespace aoi
