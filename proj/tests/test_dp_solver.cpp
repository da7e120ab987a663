#include <sstream>

#include "aoi/dp_solver.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace aoi;

namespace {

SystemState st(const char* text) { return SystemState::parse(text); }

struct Case {
  ModelParams params;
  SystemState x0;
};

std::vector<Case> small_cases() {
  std::vector<Case> out;
  auto a = ModelParams::uniform(2, 1, 0.6, 0.5, 4);
  out.push_back({a, SystemState::fresh(2)});
  auto b = ModelParams::uniform(3, 2, 0.3, 0.0, 4);
  b.q = {0.2, 0.9, 0.5};
  out.push_back({b, st("g=[0,psi,2];h=[3,1,5]")});
  auto c = ModelParams::uniform(3, 1, 0.8, 0.0, 3);
  c.q = {1.0, 0.0, 0.4};
  out.push_back({c, st("g=[1,0,psi];h=[4,6,2]")});
  auto d = ModelParams::uniform(1, 1, 0.5, 0.5, 5);
  out.push_back({d, st("g=[0];h=[2]")});
  return out;
}

oracle::Instance inst(const ModelParams& m) { return {m.n_channels, m.p, m.q, m.horizon}; }

}  // namespace

TEST_CASE("reachable_states examples") {
  const auto params = ModelParams::uniform(1, 1, 0.5, 0.5, 1);
  auto sets = reachable_states(params, SystemState::fresh(1));
  REQUIRE(sets.size() == 1);
  CHECK(sets[0] == std::vector<SystemState>{SystemState::fresh(1)});

  auto idle = ModelParams::uniform(1, 1, 0.5, 0.0, 3);
  sets = reachable_states(idle, st("g=[psi];h=[0]"));
  REQUIRE(sets.size() == 3);
  CHECK(sets[1] == std::vector<SystemState>{st("g=[psi];h=[1]")});
  CHECK(sets[2] == std::vector<SystemState>{st("g=[psi];h=[2]")});

  auto two = ModelParams::uniform(1, 1, 0.5, 0.5, 2);
  sets = reachable_states(two, st("g=[0];h=[1]"));
  CHECK(sets[1].size() == 4);
}

TEST_CASE("state cap is enforced") {
  const auto params = ModelParams::uniform(3, 1, 0.5, 0.5, 8);
  DpOptions options;
  options.state_cap = 50;
  try {
    (void)solve_optimal(params, SystemState::fresh(3), options);
    FAIL("expected StateSpaceTooLarge");
  } catch (const StateSpaceTooLarge& e) {
    CHECK(e.count() > 50);
    CHECK(e.cap() == 50);
  }
}

TEST_CASE("solve_optimal hand values") {
  const auto params = ModelParams::uniform(1, 1, 1.0, 1.0, 2);
  const auto table = solve_optimal(params, st("g=[0];h=[1]"));
  CHECK(table.value(1, st("g=[0];h=[1]")) == 2.0);
  CHECK(table.value(2, st("g=[0];h=[1]")) == 1.0);
  CHECK_FALSE(table.entry(2, st("g=[0];h=[1]")).action.has_value());
}

TEST_CASE("solve_optimal matches plain expectimax") {
  for (const auto& c : small_cases()) {
    const auto table = solve_optimal(c.params, c.x0);
    oracle::Expectimax ref(inst(c.params));
    for (int t = 1; t <= c.params.horizon; ++t) {
      for (const auto& key : table.keys(t)) {
        CHECK(table.value(t, key.state) ==
              doctest::Approx(ref.value(t, oracle::to_plain(key.state))).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("evaluate_policy matches independent rule evaluation") {
  for (const auto& c : small_cases()) {
    const int d = c.params.n_channels;
    const auto x0p = oracle::to_plain(c.x0);

    const auto delta = evaluate_policy(DeltaPolicy(d), c.params, c.x0);
    oracle::RuleValue delta_ref(inst(c.params), [d](int, const oracle::Plain& x) {
      return oracle::delta_action(x, d);
    });
    CHECK(delta.value(1, c.x0) == doctest::Approx(delta_ref.value(1, x0p)).epsilon(1e-12));

    const auto pi = evaluate_policy(PartialInfoPolicy(d), c.params, c.x0);
    oracle::RuleValue pi_ref(inst(c.params), [d](int, const oracle::Plain& x) {
      std::vector<int> holders;
      for (std::size_t k = 0; k < x.g.size(); ++k) {
        if (x.g[k] >= 0) holders.push_back(static_cast<int>(k));
      }
      std::stable_sort(holders.begin(), holders.end(), [&](int i, int j) {
        return x.h[static_cast<std::size_t>(i)] > x.h[static_cast<std::size_t>(j)];
      });
      holders.resize(std::min<std::size_t>(holders.size(), static_cast<std::size_t>(d)));
      std::sort(holders.begin(), holders.end());
      return holders;
    });
    CHECK(pi.value(1, c.x0) == doctest::Approx(pi_ref.value(1, x0p)).epsilon(1e-12));

    const auto rr = evaluate_policy(RoundRobinPolicy(d, RrMode::WorkConserving), c.params, c.x0);
    oracle::RoundRobinValue rr_ref(inst(c.params));
    CHECK(rr.value(1, c.x0) == doctest::Approx(rr_ref.value(1, x0p, 0)).epsilon(1e-12));
  }
}

TEST_CASE("policy values dominate the optimum") {
  const auto params = ModelParams::uniform(2, 1, 0.6, 0.5, 4);
  const auto x0 = SystemState::fresh(2);
  const auto opt = solve_optimal(params, x0);
  for (auto name : {"delta", "pi", "rr", "rr-strict"}) {
    const auto policy = make_policy(name, params, x0);
    const auto table = evaluate_policy(*policy, params, x0);
    CHECK(table.value(1, x0) >= opt.value(1, x0) - 1e-9);
    for (int t = 1; t <= params.horizon; ++t) {
      for (const auto& key : table.keys(t)) {
        CHECK(table.value(t, key.state, key.cursor) >= opt.value(t, key.state) - 1e-9);
        CHECK(table.value(t, key.state, key.cursor) >= static_cast<double>(cost(key.state)));
      }
    }
  }
}

TEST_CASE("replaying the optimal actions reproduces the optimum") {
  const auto params = ModelParams::uniform(3, 2, 0.4, 0.5, 4);
  const auto x0 = st("g=[0,1,psi];h=[2,4,3]");
  auto table = std::make_shared<const DpTable>(solve_optimal(params, x0));
  const auto replay = evaluate_policy(DpPolicy(table), params, x0);
  CHECK(replay.value(1, x0) == table->value(1, x0));
}

TEST_CASE("no-success closed form") {
  auto params = ModelParams::uniform(3, 2, 0.0, 0.0, 6);
  params.q = {0.3, 1.0, 0.0};
  const auto x0 = st("g=[0,psi,1];h=[2,5,4]");
  const double expected = static_cast<double>(oracle::no_success_cost({2, 5, 4}, 6));
  CHECK(solve_optimal(params, x0).value(1, x0) == expected);
  for (auto name : {"delta", "pi", "rr", "rr-strict"}) {
    CHECK(evaluate_policy(*make_policy(name, params, x0), params, x0).value(1, x0) == expected);
  }
}

TEST_CASE("stage T-1 closed form and agreement with delta") {
  const auto params = ModelParams::uniform(3, 2, 0.45, 0.5, 4);
  const auto x0 = st("g=[0,2,psi];h=[1,5,2]");
  const auto opt = solve_optimal(params, x0);
  const auto delta = evaluate_policy(DeltaPolicy(2), params, x0);
  const int t = params.horizon - 1;
  for (const auto& key : opt.keys(t)) {
    const auto p = oracle::to_plain(key.state);
    const double closed = 2.0 * oracle::cost(p) + 3 + params.p * oracle::l_delta(p, 2);
    CHECK(opt.value(t, key.state) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(penultimate_value(key.state, params) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(l_delta(key.state, 2) == oracle::l_delta(p, 2));
  }
  for (const auto& key : delta.keys(t)) {
    CHECK(delta.value(t, key.state) == opt.value(t, key.state));
  }
}

TEST_CASE("bound constants") {
  auto k2 = bound_constants(2, 0.5, 1);
  CHECK(k2.c1 == 1.5);
  CHECK(k2.c2 == 0.0);
  CHECK(k2.d1 == 2.0);
  CHECK(k2.d2 == 0.0);

  auto k3 = bound_constants(3, 0.5, 1);
  CHECK(k3.c1 == doctest::Approx(6.25));
  CHECK(k3.d1 == doctest::Approx(10.0));
  // C2(3) = 1.5 (1.5 + 0); D2(3) = 1.5 (2 + 0) + 2 (1.5 + 0).
  CHECK(k3.c2 == doctest::Approx(2.25));
  CHECK(k3.d2 == doctest::Approx(6.0));

  double prev = 0.0;
  for (int k = 2; k <= 10; ++k) {
    const auto b = bound_constants(k, 0.3, 2);
    CHECK(b.d1 > prev);
    prev = b.d1;
    const auto next = bound_constants(k + 1, 0.3, 2);
    CHECK(next.c1 >= b.c1);
    CHECK(next.c2 >= b.c2);
    CHECK(next.d2 >= b.d2);
  }
  CHECK_THROWS_AS(bound_constants(1, 0.5, 1), InvalidDepth);
}

TEST_CASE("theorem1_gap report") {
  const auto params = ModelParams::uniform(2, 1, 0.3, 0.5, 5);
  const auto x0 = SystemState::fresh(2);
  const auto gap = theorem1_gap(params, x0);
  CHECK(gap.diff >= -1e-9);
  CHECK(gap.bound_holds());
  REQUIRE(gap.z);
  CHECK(*gap.z == doctest::Approx(gap.diff / (0.3 * 0.3)));
  CHECK(gap.stage_max_gap[4] == 0.0);
  CHECK(gap.stage_max_gap[3] == 0.0);
  CHECK(gap.stage_min_gap[3] == 0.0);
  REQUIRE(gap.constants);
  CHECK(gap.constants->k == 4);
  CHECK(gap.norm_inf_x0 == 2);
  CHECK(gap.bound == doctest::Approx(0.09 * (gap.constants->d1 * 2 + gap.constants->d2)));

  auto zero = params;
  zero.p = 0.0;
  const auto flat = theorem1_gap(zero, x0);
  CHECK(flat.diff == 0.0);
  CHECK_FALSE(flat.z);
  CHECK_THROWS_AS(normalized_gap(flat), DegenerateP);

  auto short_horizon = params;
  short_horizon.horizon = 2;
  const auto g2 = theorem1_gap(short_horizon, x0);
  CHECK(g2.diff == 0.0);
  CHECK_FALSE(g2.constants);
}

TEST_CASE("gap over p squared stays bounded for small p") {
  auto params = ModelParams::uniform(2, 1, 0.05, 0.5, 5);
  const auto x0 = SystemState::fresh(2);
  std::vector<double> ratios;
  for (double p : {0.05, 0.1, 0.2}) {
    params.p = p;
    const auto gap = theorem1_gap(params, x0);
    CHECK(gap.diff >= 0.0);
    ratios.push_back(gap.diff / (p * p));
  }
  // A p-independent constant bounds diff / p^2: the ratio does not blow up as p shrinks.
  CHECK(ratios[0] <= ratios[2] + 1e-12);
}

TEST_CASE("one-step age identity examples") {
  const auto params = ModelParams::uniform(1, 1, 0.5, 0.0, 1);
  auto r = lemma1_check(st("g=[0];h=[2]"), Action{{0}}, params);
  CHECK(r.lhs == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.rhs == 2.0);

  auto three = ModelParams::uniform(2, 1, 0.7, 0.5, 1);
  r = lemma1_check(st("g=[psi,psi];h=[4,1]"), Action{}, three);
  CHECK(r.lhs == 7.0);
  CHECK(r.rhs == 7.0);

  three.p = 0.0;
  r = lemma1_check(st("g=[1,psi];h=[4,1]"), Action{{0}}, three);
  CHECK(r.lhs == 7.0);
  CHECK(r.rhs == 7.0);
}

TEST_CASE("delta objective decomposition examples") {
  auto params = ModelParams::uniform(1, 1, 0.5, 0.0, 1);
  auto r = lemma2_decompose(st("g=[0];h=[5]"), Action{{0}}, params);
  CHECK(r.u == -5.0);
  CHECK(std::abs(r.u) <= 6.0);
  CHECK(r.mixture() == doctest::Approx(r.expected).epsilon(1e-14));

  params.p = 1.0;
  params.q = {0.5};
  r = lemma2_decompose(st("g=[1];h=[3]"), Action{{0}}, params);
  CHECK(r.p_x_d == 1.0);
  CHECK(r.p_d == 1.0);
  CHECK(r.v == doctest::Approx(r.expected).epsilon(1e-14));

  auto three = ModelParams::uniform(3, 1, 0.4, 0.0, 1);
  three.q = {0.1, 0.6, 0.3};
  const auto x = st("g=[0,2,1];h=[3,4,6]");
  const double u0 = lemma2_decompose(x, Action{{0}}, three).u;
  CHECK(lemma2_decompose(x, Action{{1}}, three).u == doctest::Approx(u0).epsilon(1e-12));
  CHECK(lemma2_decompose(x, Action{{2}}, three).u == doctest::Approx(u0).epsilon(1e-12));

  CHECK_THROWS_AS(lemma2_decompose(st("g=[psi];h=[2]"), Action{}, params), NoAction);
  CHECK_THROWS_AS(lemma2_decompose(x, Action{{0, 1}}, three), InvalidAction);
}

TEST_CASE("debug dump lists every stored state") {
  const auto params = ModelParams::uniform(1, 1, 0.5, 0.5, 2);
  const auto table = solve_optimal(params, SystemState::fresh(1));
  std::ostringstream out;
  table.write_debug(out);
  const auto text = out.str();
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == table.total_size());
  CHECK(text.find("g=[0];h=[1]") != std::string::npos);
}
