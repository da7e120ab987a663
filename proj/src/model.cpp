#include "aoi/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "aoi/random.hpp"

namespace aoi {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits "[a,b,c]" into its trimmed items.
std::vector<std::string_view> bracket_items(std::string_view body, std::string_view what) {
  body = trim(body);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
    throw InvalidState("state text: expected [..] for " + std::string(what));
  }
  body = body.substr(1, body.size() - 2);
  std::vector<std::string_view> items;
  if (trim(body).empty()) return items;
  while (true) {
    const auto comma = body.find(',');
    items.push_back(trim(body.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return items;
}

Age parse_age(std::string_view token) {
  Age value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end || value < 0) {
    throw InvalidState("state text: bad age '" + std::string(token) + "'");
  }
  return value;
}

bool contains_sorted(const std::vector<SourceIndex>& v, SourceIndex n) {
  return std::binary_search(v.begin(), v.end(), n);
}

}  // namespace

AgeValue::AgeValue(Age age) : raw_(age) {
  if (age < 0) throw InvalidState("age must be nonnegative, got " + std::to_string(age));
}

SystemState::SystemState(std::vector<AgeValue> g, std::vector<Age> h)
    : g_(std::move(g)), h_(std::move(h)) {
  if (g_.size() != h_.size()) {
    throw InvalidState("g and h lengths differ (" + std::to_string(g_.size()) + " vs " +
                       std::to_string(h_.size()) + ")");
  }
  if (h_.empty()) throw InvalidState("state needs at least one source");
  for (std::size_t n = 0; n < h_.size(); ++n) {
    if (h_[n] < 0) throw InvalidState("negative destination age at source " + std::to_string(n + 1));
    if (!g_[n].is_empty() && g_[n].value() >= h_[n]) {
      throw InvalidState("source " + std::to_string(n + 1) + ": g=" +
                         std::to_string(g_[n].value()) + " must be < h=" +
                         std::to_string(h_[n]));
    }
  }
}

SystemState SystemState::parse(std::string_view text) {
  text = trim(text);
  const auto semi = text.find(';');
  if (semi == std::string_view::npos) throw InvalidState("state text: missing ';'");
  auto g_part = trim(text.substr(0, semi));
  auto h_part = trim(text.substr(semi + 1));
  if (!g_part.starts_with("g=") || !h_part.starts_with("h=")) {
    throw InvalidState("state text: expected g=[..];h=[..]");
  }
  std::vector<AgeValue> g;
  for (auto item : bracket_items(g_part.substr(2), "g")) {
    g.push_back(item == "psi" ? kEmpty : AgeValue(parse_age(item)));
  }
  std::vector<Age> h;
  for (auto item : bracket_items(h_part.substr(2), "h")) h.push_back(parse_age(item));
  return SystemState(std::move(g), std::move(h));
}

SystemState SystemState::fresh(int n_sources) {
  if (n_sources < 1) throw InvalidState("state needs at least one source");
  const auto n = static_cast<std::size_t>(n_sources);
  return SystemState(std::vector<AgeValue>(n, AgeValue(0)), std::vector<Age>(n, 1));
}

std::string SystemState::to_string() const {
  std::ostringstream out;
  out << "g=[";
  for (std::size_t n = 0; n < g_.size(); ++n) {
    if (n) out << ',';
    if (g_[n].is_empty()) {
      out << "psi";
    } else {
      out << g_[n].value();
    }
  }
  out << "];h=[";
  for (std::size_t n = 0; n < h_.size(); ++n) {
    if (n) out << ',';
    out << h_[n];
  }
  out << ']';
  return out.str();
}

std::size_t SystemStateHash::operator()(const SystemState& x) const noexcept {
  std::uint64_t acc = x.size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    const auto packed = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x.g()[n].raw())) << 32) |
                        static_cast<std::uint32_t>(x.h()[n]);
    acc = mix64(acc ^ packed);
  }
  return static_cast<std::size_t>(acc);
}

SystemState new_state(std::vector<AgeValue> g, std::vector<Age> h) {
  return SystemState(std::move(g), std::move(h));
}

void ModelParams::validate() const {
  auto is_prob = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (n_sources < 1) throw InvalidParams("n_sources must be >= 1");
  if (n_channels < 1) throw InvalidParams("n_channels must be >= 1");
  if (horizon < 1) throw InvalidParams("horizon must be >= 1");
  if (!is_prob(p)) throw InvalidParams("p must lie in [0,1]");
  if (q.size() != static_cast<std::size_t>(n_sources)) {
    throw InvalidParams("q has " + std::to_string(q.size()) + " entries, expected " +
                        std::to_string(n_sources));
  }
  for (std::size_t n = 0; n < q.size(); ++n) {
    if (!is_prob(q[n])) throw InvalidParams("q[" + std::to_string(n + 1) + "] must lie in [0,1]");
  }
}

ModelParams ModelParams::uniform(int n_sources, int n_channels, double p, double q,
                                 int horizon) {
  ModelParams params;
  params.n_sources = n_sources;
  params.n_channels = n_channels;
  params.p = p;
  params.q.assign(static_cast<std::size_t>(std::max(n_sources, 0)), q);
  params.horizon = horizon;
  params.validate();
  return params;
}

bool Action::contains(SourceIndex n) const { return contains_sorted(scheduled, n); }

Action Action::from_indices(std::vector<SourceIndex> indices) {
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw InvalidAction("action lists a source twice");
  }
  return Action{std::move(indices)};
}

std::string to_string(const Action& a) {
  std::string out = "{";
  for (std::size_t i = 0; i < a.scheduled.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(a.scheduled[i] + 1);
  }
  out += '}';
  return out;
}

std::vector<SourceIndex> sources_with_packets(const SystemState& x) {
  std::vector<SourceIndex> holders;
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (!x.g()[n].is_empty()) holders.push_back(static_cast<SourceIndex>(n));
  }
  return holders;
}

int packet_count(const SystemState& x) {
  return static_cast<int>(std::count_if(x.g().begin(), x.g().end(),
                                        [](AgeValue g) { return !g.is_empty(); }));
}

std::vector<Action> enumerate_actions(const SystemState& x, int n_channels) {
  const auto holders = sources_with_packets(x);
  const auto k = std::min(holders.size(), static_cast<std::size_t>(std::max(n_channels, 0)));
  std::vector<Action> actions;
  // Lexicographic k-combinations of the holder list.
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    Action a;
    a.scheduled.reserve(k);
    for (auto i : pick) a.scheduled.push_back(holders[i]);
    actions.push_back(std::move(a));
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == holders.size() - k + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return actions;
}

void check_action(const SystemState& x, const Action& a) {
  for (std::size_t i = 0; i < a.scheduled.size(); ++i) {
    const auto n = a.scheduled[i];
    if (n < 0 || static_cast<std::size_t>(n) >= x.size()) {
      throw InvalidAction("action schedules unknown source " + std::to_string(n + 1));
    }
    if (i > 0 && a.scheduled[i - 1] >= n) throw InvalidAction("action indices must be strictly increasing");
    if (x.g(n).is_empty()) {
      throw InvalidAction("action schedules source " + std::to_string(n + 1) + " which has no packet");
    }
  }
}

bool is_work_conserving(const SystemState& x, const Action& a, int n_channels) {
  try {
    check_action(x, a);
  } catch (const InvalidAction&) {
    return false;
  }
  return static_cast<int>(a.size()) == std::min(packet_count(x), n_channels);
}

std::int64_t cost(const SystemState& x) {
  std::int64_t total = 0;
  for (auto h : x.h()) total += h;
  return total;
}

std::int64_t age_gap(const SystemState& x, const Action& a) {
  std::int64_t total = 0;
  for (auto n : a.scheduled) total += static_cast<std::int64_t>(x.g(n).value()) - x.h(n);
  return total;
}

namespace {

SystemState successor_state(const SystemState& x, const std::vector<SourceIndex>& successes,
                            const std::vector<SourceIndex>& arrivals, TransitionFault fault) {
  const auto size = x.size();
  std::vector<AgeValue> g(size);
  std::vector<Age> h(size);
  for (std::size_t i = 0; i < size; ++i) {
    const auto n = static_cast<SourceIndex>(i);
    const bool delivered = contains_sorted(successes, n);
    const bool arrived = contains_sorted(arrivals, n);
    if (delivered) {
      h[i] = x.g(n).value() + (fault == TransitionFault::SuccessSkipsAging ? 0 : 1);
    } else {
      h[i] = x.h(n) + 1;
    }
    if (arrived) {
      g[i] = AgeValue(0);
    } else if (delivered) {
      g[i] = kEmpty;
    } else {
      g[i] = x.g(n).aged();
    }
  }
  return SystemState(std::move(g), std::move(h));
}

std::vector<SourceIndex> sorted_unique(std::vector<SourceIndex> v, const char* what) {
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
    throw InvalidEvent(std::string(what) + " lists a source twice");
  }
  return v;
}

}  // namespace

SystemState apply_transition(const SystemState& x, const Action& a, const TransitionEvent& e) {
  check_action(x, a);
  const auto successes = sorted_unique(e.successes, "successes");
  const auto arrivals = sorted_unique(e.arrivals, "arrivals");
  for (auto n : successes) {
    if (!a.contains(n)) {
      throw InvalidEvent("source " + std::to_string(n + 1) + " succeeded without being scheduled");
    }
  }
  for (auto n : arrivals) {
    if (n < 0 || static_cast<std::size_t>(n) >= x.size()) {
      throw InvalidEvent("arrival at unknown source " + std::to_string(n + 1));
    }
  }
  return successor_state(x, successes, arrivals, TransitionFault::None);
}

double transition_prob(const Action& a, const TransitionEvent& e, const ModelParams& params) {
  const auto successes = static_cast<int>(e.successes.size());
  const auto failures = static_cast<int>(a.size()) - successes;
  double prob = std::pow(params.p, successes) * std::pow(1.0 - params.p, failures);
  std::vector<SourceIndex> arrivals = e.arrivals;
  std::sort(arrivals.begin(), arrivals.end());
  for (std::size_t n = 0; n < params.q.size(); ++n) {
    const bool arrived = contains_sorted(arrivals, static_cast<SourceIndex>(n));
    prob *= arrived ? params.q[n] : 1.0 - params.q[n];
  }
  return prob;
}

std::vector<Successor> enumerate_transitions(const SystemState& x, const Action& a,
                                             const ModelParams& params, TransitionFault fault) {
  check_action(x, a);
  if (params.q.size() != x.size()) throw InvalidParams("q length does not match the state");

  // Outcomes with probability 0 or 1 are fixed; only uncertain ones branch.
  std::vector<SourceIndex> uncertain_w, fixed_w, uncertain_c, fixed_c;
  if (params.p > 0.0 && params.p < 1.0) {
    uncertain_w = a.scheduled;
  } else if (params.p == 1.0) {
    fixed_w = a.scheduled;
  }
  for (std::size_t n = 0; n < x.size(); ++n) {
    const auto q = params.q[n];
    if (q > 0.0 && q < 1.0) {
      uncertain_c.push_back(static_cast<SourceIndex>(n));
    } else if (q == 1.0) {
      fixed_c.push_back(static_cast<SourceIndex>(n));
    }
  }
  if (uncertain_w.size() + uncertain_c.size() > 30) {
    throw InvalidParams("too many random outcomes to enumerate");
  }

  std::vector<Successor> out;
  std::unordered_map<SystemState, std::size_t> seen;
  const std::uint64_t w_count = std::uint64_t{1} << uncertain_w.size();
  const std::uint64_t c_count = std::uint64_t{1} << uncertain_c.size();
  TransitionEvent e;
  for (std::uint64_t wm = 0; wm < w_count; ++wm) {
    e.successes = fixed_w;
    for (std::size_t i = 0; i < uncertain_w.size(); ++i) {
      if (wm >> i & 1U) e.successes.push_back(uncertain_w[i]);
    }
    std::sort(e.successes.begin(), e.successes.end());
    for (std::uint64_t cm = 0; cm < c_count; ++cm) {
      e.arrivals = fixed_c;
      for (std::size_t i = 0; i < uncertain_c.size(); ++i) {
        if (cm >> i & 1U) e.arrivals.push_back(uncertain_c[i]);
      }
      std::sort(e.arrivals.begin(), e.arrivals.end());
      const double prob = transition_prob(a, e, params);
      if (prob == 0.0) continue;
      auto next = successor_state(x, e.successes, e.arrivals, fault);
      const auto [it, inserted] = seen.try_emplace(next, out.size());
      if (inserted) {
        out.push_back({std::move(next), prob});
      } else {
        out[it->second].probability += prob;
      }
    }
  }
  return out;
}

std::pair<SystemState, TransitionEvent> sample_step(const SystemState& x, const Action& a,
                                                    const ModelParams& params, RandomStream& rng) {
  check_action(x, a);
  TransitionEvent e;
  for (auto n : a.scheduled) {
    if (rng.bernoulli(params.p)) e.successes.push_back(n);
  }
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (rng.bernoulli(params.q[n])) e.arrivals.push_back(static_cast<SourceIndex>(n));
  }
  auto next = successor_state(x, e.successes, e.arrivals, TransitionFault::None);
  return {std::move(next), std::move(e)};
}

Age norm_inf(const SystemState& x) {
  return *std::max_element(x.h().begin(), x.h().end()) + 1;
}

SuccessProbs success_probs(double p, int n_channels, int n_attempts) {
  if (n_channels < 1) throw InvalidParams("n_channels must be >= 1");
  if (n_attempts < 0 || n_attempts > n_channels) {
    throw InvalidParams("n_attempts must lie in [0, n_channels]");
  }
  SuccessProbs out;
  out.p_d = 1.0 - std::pow(1.0 - p, n_channels);
  out.p_x_d = 1.0 - std::pow(1.0 - p, n_attempts);
  double binom = n_channels;  // C(d, 1)
  double p_pow = 1.0;
  for (int l = 0; l < n_channels; ++l) {
    out.c_p += (l % 2 == 0 ? 1.0 : -1.0) * binom * p_pow;
    // C(d, l+2) = C(d, l+1) * (d - l - 1) / (l + 2)
    binom = binom * (n_channels - l - 1) / (l + 2);
    p_pow *= p;
  }
  return out;
}

}  // namespace aoi
