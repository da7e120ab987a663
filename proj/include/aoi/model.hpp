#pragma once

// State, action, cost and transition machinery of the multi-source,
// multi-channel age-of-information MDP.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aoi/errors.hpp"

namespace aoi {

class RandomStream;

using SourceIndex = int;
using Age = std::int32_t;

/// Age of the packet waiting at a source, or EMPTY when the buffer holds none.
class AgeValue {
 public:
  constexpr AgeValue() = default;

  /// Throws InvalidState for negative ages.
  explicit AgeValue(Age age);

  static constexpr AgeValue empty() { return AgeValue{}; }

  constexpr bool is_empty() const { return raw_ < 0; }
  /// Precondition: !is_empty().
  constexpr Age value() const { return raw_; }
  /// EMPTY stays EMPTY.
  constexpr AgeValue aged() const {
    AgeValue next;
    next.raw_ = is_empty() ? kEmptyRaw : raw_ + 1;
    return next;
  }
  constexpr std::int32_t raw() const { return raw_; }

  friend constexpr bool operator==(AgeValue, AgeValue) = default;

 private:
  static constexpr std::int32_t kEmptyRaw = -1;
  std::int32_t raw_ = kEmptyRaw;
};

inline constexpr AgeValue kEmpty = AgeValue::empty();

/// X(t) = (g, h): ages at the sources and at the destination.
class SystemState {
 public:
  SystemState() = default;

  /// Validating constructor. Throws InvalidState on length mismatch, empty
  /// vectors, negative destination ages, or g[n] >= h[n].
  SystemState(std::vector<AgeValue> g, std::vector<Age> h);

  /// Parses `g=[psi,0,3];h=[7,1,5]`.
  static SystemState parse(std::string_view text);

  /// g_n = 0, h_n = 1 for every source.
  static SystemState fresh(int n_sources);

  std::size_t size() const { return h_.size(); }
  const std::vector<AgeValue>& g() const { return g_; }
  const std::vector<Age>& h() const { return h_; }
  AgeValue g(SourceIndex n) const { return g_[static_cast<std::size_t>(n)]; }
  Age h(SourceIndex n) const { return h_[static_cast<std::size_t>(n)]; }

  std::string to_string() const;

  friend bool operator==(const SystemState&, const SystemState&) = default;

 private:
  std::vector<AgeValue> g_;
  std::vector<Age> h_;
};

struct SystemStateHash {
  std::size_t operator()(const SystemState& x) const noexcept;
};

/// Validating constructor used throughout the public API.
SystemState new_state(std::vector<AgeValue> g, std::vector<Age> h);

struct ModelParams {
  int n_sources = 1;
  int n_channels = 1;
  double p = 0.5;
  std::vector<double> q{0.5};
  int horizon = 1;

  /// Throws InvalidParams when any field is out of range.
  void validate() const;

  static ModelParams uniform(int n_sources, int n_channels, double p, double q,
                             int horizon);
};

/// Scheduled subset of sources, stored in strictly increasing index order.
struct Action {
  std::vector<SourceIndex> scheduled;

  std::size_t size() const { return scheduled.size(); }
  bool empty() const { return scheduled.empty(); }
  bool contains(SourceIndex n) const;

  /// Sorts the indices and checks they are distinct.
  static Action from_indices(std::vector<SourceIndex> indices);

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

/// Renders `{1,3}` using 1-based source numbers.
std::string to_string(const Action& a);

/// Successes W (subset of the action) and arrivals C (subset of all sources).
struct TransitionEvent {
  std::vector<SourceIndex> successes;
  std::vector<SourceIndex> arrivals;

  friend bool operator==(const TransitionEvent&, const TransitionEvent&) = default;
};

struct Successor {
  SystemState state;
  double probability = 0.0;
};

/// Negative-control hook for the verification suite. `SuccessSkipsAging`
/// breaks the destination update on success (h' = g instead of g + 1).
enum class TransitionFault { None, SuccessSkipsAging };

/// S_x: sources holding a packet, increasing order.
std::vector<SourceIndex> sources_with_packets(const SystemState& x);
int packet_count(const SystemState& x);

/// All work-conserving actions in lexicographic order.
std::vector<Action> enumerate_actions(const SystemState& x, int n_channels);

/// Throws InvalidAction unless every scheduled source holds a packet.
void check_action(const SystemState& x, const Action& a);
/// True when |a| = min(N_x, d) and a is a subset of S_x.
bool is_work_conserving(const SystemState& x, const Action& a, int n_channels);

std::int64_t cost(const SystemState& x);

/// l(x, a): sum of g - h over the scheduled sources.
std::int64_t age_gap(const SystemState& x, const Action& a);

SystemState apply_transition(const SystemState& x, const Action& a,
                             const TransitionEvent& e);

double transition_prob(const Action& a, const TransitionEvent& e,
                       const ModelParams& params);

/// Exhaustive successor law, duplicates merged, zero-probability outcomes
/// dropped. Order is deterministic.
std::vector<Successor> enumerate_transitions(const SystemState& x, const Action& a,
                                             const ModelParams& params,
                                             TransitionFault fault = TransitionFault::None);

/// Draws W then C (success draws per scheduled source ascending, then arrival
/// draws per source ascending).
std::pair<SystemState, TransitionEvent> sample_step(const SystemState& x,
                                                    const Action& a,
                                                    const ModelParams& params,
                                                    RandomStream& rng);

/// max_n (h_n + 1)
Age norm_inf(const SystemState& x);

struct SuccessProbs {
  double p_d = 0.0;    // 1 - (1-p)^d
  double c_p = 0.0;    // sum_{l<d} (-1)^l C(d, l+1) p^l
  double p_x_d = 0.0;  // 1 - (1-p)^n_attempts
};

SuccessProbs success_probs(double p, int n_channels, int n_attempts);

}  // namespace aoi

template <>
struct std::hash<aoi::SystemState> {
  std::size_t operator()(const aoi::SystemState& x) const noexcept {
    return aoi::SystemStateHash{}(x);
  }
};
