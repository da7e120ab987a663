#include "aoi/verification.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <sstream>

#include "aoi/dp_solver.hpp"
#include "aoi/random.hpp"

namespace aoi {

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not-applicable";
  }
  return "fail";
}

bool VerifyReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

nlohmann::ordered_json VerifyReport::to_json() const {
  auto list = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json item;
    item["name"] = c.name;
    item["status"] = to_string(c.status);
    item["measured"] = c.measured;
    if (!c.detail.empty()) item["detail"] = c.detail;
    list.push_back(std::move(item));
  }
  nlohmann::ordered_json out;
  out["passed"] = passed();
  out["checks"] = std::move(list);
  return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

struct RandomCase {
  ModelParams params;
  SystemState state;
  Action action;
};

double random_probability(RandomStream& rng) {
  const double u = rng.uniform();
  if (u < 0.05) return 0.0;
  if (u < 0.10) return 1.0;
  return rng.uniform();
}

// N <= 4, ages <= 20, random work-conserving action.
RandomCase random_case(RandomStream& rng, bool need_packet) {
  RandomCase c;
  c.params.n_sources = 1 + static_cast<int>(rng.next_u64() % 4);
  c.params.n_channels = 1 + static_cast<int>(rng.next_u64() % 3);
  c.params.p = random_probability(rng);
  c.params.q.clear();
  for (int n = 0; n < c.params.n_sources; ++n) c.params.q.push_back(random_probability(rng));
  c.params.horizon = 2;

  std::vector<AgeValue> g;
  std::vector<Age> h;
  for (int n = 0; n < c.params.n_sources; ++n) {
    const auto hn = static_cast<Age>(rng.next_u64() % 21);
    h.push_back(hn);
    if (hn == 0 || rng.uniform() < 0.3) {
      g.push_back(kEmpty);
    } else {
      g.push_back(AgeValue(static_cast<Age>(rng.next_u64() % static_cast<std::uint64_t>(hn))));
    }
  }
  if (need_packet && std::all_of(g.begin(), g.end(), [](AgeValue v) { return v.is_empty(); })) {
    const auto n = rng.next_u64() % g.size();
    h[n] = std::max<Age>(h[n], 1);
    g[n] = AgeValue(static_cast<Age>(rng.next_u64() % static_cast<std::uint64_t>(h[n])));
  }
  c.state = SystemState(std::move(g), std::move(h));
  const auto actions = enumerate_actions(c.state, c.params.n_channels);
  c.action = actions[rng.next_u64() % actions.size()];
  return c;
}

template <class Fn>
CheckResult guarded(std::string name, Fn fn) {
  CheckResult result;
  result.name = std::move(name);
  try {
    fn(result);
  } catch (const std::exception& e) {
    result.status = CheckStatus::Fail;
    result.detail = std::string("exception: ") + e.what();
  }
  return result;
}

void set_status(CheckResult& r, bool ok) { r.status = ok ? CheckStatus::Pass : CheckStatus::Fail; }

std::string p_label(double p) {
  std::ostringstream out;
  out << p;
  return out.str();
}

}  // namespace

VerifyReport run_verification(const VerifyOptions& options) {
  VerifyReport report;
  RandomStream root(options.seed);

  report.checks.push_back(guarded("probability_closure", [&](CheckResult& r) {
    RandomStream rng = root.split(1);
    double worst = 0.0;
    for (int i = 0; i < options.closure_cases; ++i) {
      const auto c = random_case(rng, false);
      double total = 0.0;
      for (const auto& s : enumerate_transitions(c.state, c.action, c.params, options.fault)) {
        total += s.probability;
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
    r.measured["cases"] = options.closure_cases;
    r.measured["max_abs_error"] = worst;
    r.measured["tolerance"] = 1e-12;
    set_status(r, worst <= 1e-12);
  }));

  report.checks.push_back(guarded("one_step_age_identity", [&](CheckResult& r) {
    RandomStream rng = root.split(2);
    double worst = 0.0;
    for (int i = 0; i < options.identity_cases; ++i) {
      const auto c = random_case(rng, false);
      const auto res = lemma1_check(c.state, c.action, c.params, options.fault);
      worst = std::max(worst, std::abs(res.lhs - res.rhs));
    }
    r.measured["cases"] = options.identity_cases;
    r.measured["max_abs_error"] = worst;
    r.measured["tolerance"] = 1e-12;
    set_status(r, worst <= 1e-12);
  }));

  report.checks.push_back(guarded("delta_objective_decomposition", [&](CheckResult& r) {
    RandomStream rng = root.split(3);
    double mixture_err = 0.0;
    double invariance_err = 0.0;
    double bound_excess = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < options.decomposition_cases; ++i) {
      const auto c = random_case(rng, true);
      const auto res = lemma2_decompose(c.state, c.action, c.params);
      mixture_err = std::max(mixture_err, std::abs(res.expected - res.mixture()));
      const double limit = c.params.n_channels * static_cast<double>(norm_inf(c.state));
      bound_excess = std::max({bound_excess, std::abs(res.u) - limit, std::abs(res.v) - limit});
      for (const auto& other : enumerate_actions(c.state, c.params.n_channels)) {
        const auto alt = lemma2_decompose(c.state, other, c.params);
        invariance_err = std::max(invariance_err, std::abs(alt.u - res.u));
      }
    }
    r.measured["cases"] = options.decomposition_cases;
    r.measured["max_mixture_error"] = mixture_err;
    r.measured["max_u_action_spread"] = invariance_err;
    r.measured["max_bound_excess"] = bound_excess;
    r.measured["tolerance"] = 1e-12;
    set_status(r, mixture_err <= 1e-12 && invariance_err <= 1e-12 && bound_excess <= 1e-12);
  }));

  report.checks.push_back(guarded("success_probability_identity", [&](CheckResult& r) {
    double worst = 0.0;
    for (int d = 1; d <= 6; ++d) {
      for (int i = 0; i <= 100; ++i) {
        const double p = i / 100.0;
        const auto s = success_probs(p, d, d);
        worst = std::max(worst, std::abs(s.p_d - p * s.c_p));
      }
    }
    r.measured["max_abs_error"] = worst;
    r.measured["tolerance"] = 1e-12;
    set_status(r, worst <= 1e-12);
  }));

  const auto x0 = SystemState::fresh(options.n_sources);
  auto instance = [&](double p) {
    ModelParams params;
    params.n_sources = options.n_sources;
    params.n_channels = options.n_channels;
    params.p = p;
    params.q = options.q;
    params.horizon = options.horizon;
    params.validate();
    return params;
  };
  DpOptions dp;
  dp.state_cap = options.state_cap;

  for (double p : options.gap_p) {
    const auto label = "[p=" + p_label(p) + "]";
    GapReport gap;
    bool have_gap = false;
    report.checks.push_back(guarded("gap_nonnegative" + label, [&](CheckResult& r) {
      gap = theorem1_gap(instance(p), x0, dp);
      have_gap = true;
      const double lowest = *std::min_element(gap.stage_min_gap.begin(), gap.stage_min_gap.end());
      r.measured["diff"] = gap.diff;
      r.measured["min_stage_gap"] = lowest;
      set_status(r, gap.diff >= -1e-9 && lowest >= -1e-9);
    }));
    report.checks.push_back(guarded("gap_zero_near_horizon" + label, [&](CheckResult& r) {
      if (!have_gap) throw Error("gap unavailable");
      const auto T = static_cast<std::size_t>(options.horizon);
      bool ok = gap.stage_max_gap[T - 1] == 0.0 && gap.stage_min_gap[T - 1] == 0.0;
      r.measured["gap_at_T"] = gap.stage_max_gap[T - 1];
      if (T >= 2) {
        ok = ok && gap.stage_max_gap[T - 2] == 0.0 && gap.stage_min_gap[T - 2] == 0.0;
        r.measured["max_abs_gap_at_T_minus_1"] =
            std::max(std::abs(gap.stage_max_gap[T - 2]), std::abs(gap.stage_min_gap[T - 2]));
      }
      set_status(r, ok);
    }));
    report.checks.push_back(guarded("gap_within_bound" + label, [&](CheckResult& r) {
      if (!have_gap) throw Error("gap unavailable");
      r.measured["diff"] = gap.diff;
      r.measured["bound"] = gap.bound;
      if (!gap.constants) {
        r.status = CheckStatus::NotApplicable;
        r.detail = "horizon too short for the depth-(T-1) constants; gap is 0 by construction";
        return;
      }
      set_status(r, gap.diff <= gap.bound + 1e-9);
    }));
    report.checks.push_back(guarded("closed_form_before_horizon" + label, [&](CheckResult& r) {
      const auto params = instance(p);
      if (params.horizon < 2) {
        r.status = CheckStatus::NotApplicable;
        return;
      }
      const auto table = solve_optimal(params, x0, dp);
      const int t = params.horizon - 1;
      double worst = 0.0;
      const auto& keys = table.keys(t);
      const auto& entries = table.entries(t);
      for (std::size_t i = 0; i < keys.size(); ++i) {
        worst = std::max(worst, std::abs(entries[i].value - penultimate_value(keys[i].state, params)));
      }
      r.measured["states"] = keys.size();
      r.measured["max_abs_error"] = worst;
      r.measured["tolerance"] = 1e-9;
      set_status(r, worst <= 1e-9);
    }));
  }

  report.checks.push_back(guarded("policy_values_dominate_optimal", [&](CheckResult& r) {
    const double p = options.gap_p.empty() ? 0.5 : options.gap_p.front();
    const auto params = instance(p);
    const auto optimal = solve_optimal(params, x0, dp);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto* name : {"delta", "pi", "rr"}) {
      const auto policy = make_policy(name, params, x0);
      const auto table = evaluate_policy(*policy, params, x0, dp);
      for (int t = 1; t <= params.horizon; ++t) {
        for (std::size_t i = 0; i < table.keys(t).size(); ++i) {
          worst = std::min(worst, table.entries(t)[i].value - optimal.value(t, table.keys(t)[i].state));
        }
      }
    }
    const DpPolicy replay(std::make_shared<const DpTable>(optimal));
    const auto replayed = evaluate_policy(replay, params, x0, dp);
    const double replay_err = std::abs(replayed.value(1, x0) - optimal.value(1, x0));
    r.measured["p"] = p;
    r.measured["min_policy_minus_optimal"] = worst;
    r.measured["optimal_replay_error"] = replay_err;
    set_status(r, worst >= -1e-9 && replay_err <= 1e-9);
  }));

  report.checks.push_back(guarded("gap_p2_scaling", [&](CheckResult& r) {
    r.measured["min_slope"] = options.min_scaling_slope;
    if (options.scaling_p.size() < 2 ||
        std::any_of(options.scaling_p.begin(), options.scaling_p.end(),
                    [](double p) { return p <= 0.0; })) {
      r.status = CheckStatus::NotApplicable;
      r.detail = "scaling grid needs at least two points with p > 0";
      return;
    }
    std::vector<double> gaps;
    for (double p : options.scaling_p) gaps.push_back(theorem1_gap(instance(p), x0, dp).diff);
    r.measured["p"] = options.scaling_p;
    r.measured["gaps"] = gaps;
    if (std::all_of(gaps.begin(), gaps.end(), [](double g) { return g < 1e-12; })) {
      r.status = CheckStatus::NotApplicable;
      r.detail = "every gap is below 1e-12";
      return;
    }
    if (std::any_of(gaps.begin(), gaps.end(), [](double g) { return g <= 0.0; })) {
      r.status = CheckStatus::Fail;
      r.detail = "some gaps are nonpositive; slope undefined";
      return;
    }
    const double slope = log_log_slope(options.scaling_p, gaps);
    r.measured["slope"] = slope;
    set_status(r, slope >= options.min_scaling_slope);
  }));

  return report;
}

}  // namespace aoi
