// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails. Tolerances and instance sizes are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aoi/dp_solver.hpp"
#include "aoi/experiments/commands.hpp"
#include "aoi/model.hpp"
#include "aoi/policies.hpp"
#include "aoi/simulator.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace aoi;
namespace ex = aoi::experiments;
namespace fs = std::filesystem;

namespace {

constexpr double kIdentityTol = 1e-12;
constexpr double kValueTol = 1e-9;
constexpr double kMinSlope = 1.8;
constexpr double kMcSigmas = 4.0;
constexpr double kTrendSigmas = 2.0;
constexpr double kRrTailMaxPct = 10.0;
constexpr double kMultiChannelMinPct = 30.0;

const std::vector<double> kGapP{0.1, 0.3, 0.5, 0.7, 0.9};
const std::vector<double> kScalingP{0.02, 0.04, 0.08, 0.16};

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ModelParams gap_instance(double p) {
  auto m = ModelParams::uniform(2, 1, p, 0.5, 6);
  return m;
}

// ---- criterion 1 ----------------------------------------------------------

Outcome exact_identities() {
  const auto start = Clock::now();
  gen::Rng rng(20240601);
  auto sample = [&](bool need_packet) {
    while (true) {
      const int n = gen::uniform_int(rng, 1, 4);
      const int d = gen::uniform_int(rng, 1, 3);
      auto x = gen::state(rng, n, 20);
      if (need_packet && packet_count(x) == 0) continue;
      auto params = gen::params(rng, n, d);
      auto a = gen::pick(rng, enumerate_actions(x, d));
      return std::make_tuple(x, params, a);
    }
  };

  double age_identity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto [x, params, a] = sample(false);
    const auto plain = oracle::to_plain(x);
    double lhs = 0.0;
    for (const auto& o : oracle::all_outcomes(plain, a.scheduled, params.p, params.q)) {
      lhs += o.prob * static_cast<double>(oracle::cost(o.next));
    }
    const double rhs = static_cast<double>(oracle::cost(plain)) + static_cast<double>(x.size()) +
                       params.p * static_cast<double>(oracle::gap_sum(plain, a.scheduled));
    const auto lib = lemma1_check(x, a, params);
    age_identity = std::max({age_identity, std::abs(lhs - rhs), std::abs(lib.lhs - rhs), std::abs(lib.rhs - rhs)});
  }

  double mixture = 0.0, invariance = 0.0, excess = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto [x, params, a] = sample(true);
    const auto r = lemma2_decompose(x, a, params);
    double expected = 0.0;
    for (const auto& [next, prob] : oracle::successor_law(oracle::to_plain(x), a.scheduled, params.p, params.q)) {
      expected += prob * static_cast<double>(oracle::l_delta(next, params.n_channels));
    }
    mixture = std::max(mixture, std::abs(r.mixture() - expected));
    const double bound = params.n_channels * static_cast<double>(norm_inf(x));
    excess = std::max({excess, std::abs(r.u) - bound, std::abs(r.v) - bound});
    for (const auto& other : enumerate_actions(x, params.n_channels)) {
      invariance = std::max(invariance, std::abs(lemma2_decompose(x, other, params).u - r.u));
    }
  }

  double closure = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto [x, params, a] = sample(false);
    double total = 0.0;
    for (const auto& s : enumerate_transitions(x, a, params)) total += s.probability;
    closure = std::max(closure, std::abs(total - 1.0));
  }

  double pd = 0.0;
  for (int d = 1; d <= 6; ++d) {
    for (int i = 0; i <= 100; ++i) {
      const double p = i / 100.0;
      const auto sp = success_probs(p, d, d);
      pd = std::max({pd, std::abs(sp.p_d - p * sp.c_p), std::abs(sp.p_d - oracle::p_d_enumerated(p, d))});
    }
  }

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = age_identity <= kIdentityTol && mixture <= kIdentityTol && invariance <= kIdentityTol &&
             excess <= kIdentityTol && closure <= kIdentityTol && pd <= kIdentityTol && elapsed < 10.0;
  out.detail = "age identity " + fmt(age_identity) + ", mixture " + fmt(mixture) + ", u spread " + fmt(invariance) +
               ", bound excess " + fmt(excess) + ", closure " + fmt(closure) + ", p_d " + fmt(pd) +
               ", " + fmt(elapsed) + " s";
  return out;
}

// ---- criteria 2 and 4 -----------------------------------------------------

Outcome gap_desk_scale() {
  const auto start = Clock::now();
  const auto x0 = SystemState::fresh(2);
  Outcome out;
  std::string worst;
  for (double p : kGapP) {
    const auto params = gap_instance(p);
    const auto gap = theorem1_gap(params, x0);
    const int T = params.horizon;

    oracle::Expectimax opt({1, p, params.q, T});
    oracle::RuleValue delta({1, p, params.q, T},
                            [](int, const oracle::Plain& x) { return oracle::delta_action(x, 1); });
    const auto plain = oracle::to_plain(x0);
    const double v_opt = opt.value(1, plain);
    const double v_delta = delta.value(1, plain);
    const double diff = v_delta - v_opt;

    const auto c = oracle::constants(T - 1, p, 1);
    const double pd = 1.0 - std::pow(1.0 - p, 1);
    const double bound = p * pd * (c.d1 * static_cast<double>(norm_inf(x0)) + c.d2);

    const bool agree = std::abs(gap.v_optimal - v_opt) <= kValueTol &&
                       std::abs(gap.v_delta - v_delta) <= kValueTol &&
                       std::abs(gap.bound - bound) <= kValueTol * std::max(1.0, bound);
    const bool sign = diff >= -kValueTol;
    const bool last = gap.stage_max_gap[T - 1] == 0.0 && gap.stage_min_gap[T - 1] == 0.0 &&
                      gap.stage_max_gap[T - 2] == 0.0 && gap.stage_min_gap[T - 2] == 0.0;
    const bool bounded = diff <= bound + kValueTol;
    if (!(agree && sign && last && bounded)) out.pass = false;
    worst += " p=" + fmt(p) + ":diff=" + fmt(diff) + "/bound=" + fmt(bound);
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 120.0) out.pass = false;
  out.detail = fmt(elapsed) + " s;" + worst;
  return out;
}

Outcome penultimate_closed_form() {
  const auto x0 = SystemState::fresh(2);
  double err = 0.0;
  std::size_t states = 0;
  for (double p : kGapP) {
    const auto params = gap_instance(p);
    const auto table = solve_optimal(params, x0);
    const int t = params.horizon - 1;
    for (const auto& key : table.keys(t)) {
      const auto plain = oracle::to_plain(key.state);
      const double closed = 2.0 * static_cast<double>(oracle::cost(plain)) + 2.0 +
                            p * static_cast<double>(oracle::l_delta(plain, 1));
      err = std::max(err, std::abs(table.value(t, key.state) - closed));
      ++states;
    }
  }
  return {err <= kValueTol, std::to_string(states) + " states, max error " + fmt(err)};
}

// ---- criterion 3 ----------------------------------------------------------

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome gap_scaling() {
  const auto start = Clock::now();
  const auto x0 = SystemState::fresh(2);
  std::vector<double> gaps;
  bool all_tiny = true;
  for (double p : kScalingP) {
    const auto params = gap_instance(p);
    oracle::Expectimax opt({1, p, params.q, params.horizon});
    oracle::RuleValue delta({1, p, params.q, params.horizon},
                            [](int, const oracle::Plain& x) { return oracle::delta_action(x, 1); });
    const double diff = delta.value(1, oracle::to_plain(x0)) - opt.value(1, oracle::to_plain(x0));
    const double lib = theorem1_gap(params, x0).diff;
    if (std::abs(diff - lib) > kValueTol) return {false, "library gap disagrees with oracle at p=" + fmt(p)};
    gaps.push_back(diff);
    if (diff >= 1e-12) all_tiny = false;
  }
  if (all_tiny) return {true, "skipped: every gap < 1e-12"};
  for (double g : gaps) {
    if (g <= 0.0) return {false, "nonpositive gap, slope undefined"};
  }
  const double slope = least_squares_slope(kScalingP, gaps);
  const double elapsed = seconds_since(start);
  return {slope >= kMinSlope && elapsed < 120.0, "slope " + fmt(slope) + " (min " + fmt(kMinSlope) + "), " + fmt(elapsed) + " s"};
}

// ---- data files for criteria 5, 7, 8 --------------------------------------

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  double num(std::size_t row, const std::string& col) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == col) return std::stod(rows.at(row).at(i));
    }
    throw std::runtime_error("missing column " + col);
  }
  std::string str(std::size_t row, const std::string& col) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == col) return rows.at(row).at(i);
    }
    throw std::runtime_error("missing column " + col);
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Csv read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Csv csv;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (csv.header.empty()) {
      csv.header = split_csv_line(line);
    } else {
      csv.rows.push_back(split_csv_line(line));
    }
  }
  return csv;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct DataRun {
  std::string name;
  std::string command;
  ex::SweepConfig config;
  std::vector<std::string> files;  // relative to the output directory
};

ex::SweepConfig base_config(const std::string& text) {
  auto c = ex::parse_config_text(text);
  c.header_timestamp = false;
  return c;
}

std::vector<DataRun> data_runs() {
  std::vector<DataRun> runs;
  runs.push_back({"mc_vs_exact", "simulate", base_config(R"(
[model]
N = 2
d = 1
T = 6
p = 0.6
q = uniform:0.5
[run]
policies = delta, pi, rr
replications = 10000
)"),
                  {"mc_vs_exact.csv"}});
  runs.push_back({"trend_p", "simulate", base_config(R"(
[model]
N = 5
d = 1
T = 1000
q = uniform:0.5
[grid]
p = 0.2, 0.5, 0.8
[run]
policies = delta, pi
replications = 200
)"),
                  {"trend_p.csv"}});
  runs.push_back({"trend_n", "sweep", base_config(R"(
[model]
d = 1
T = 1000
p = 0.65
q = uniform:0.5
[grid]
N = 5, 25, 100
[run]
policies = delta, rr
replications = 200
)"),
                  {"trend_n_N.csv"}});
  runs.push_back({"trend_multichannel", "simulate", base_config(R"(
[model]
N = 30
d = 3
T = 1000
p = 0.9
q = uniform:0.5
[run]
policies = delta, pi
replications = 200
)"),
                  {"trend_multichannel.csv"}});
  return runs;
}

bool produce(const fs::path& dir, std::vector<DataRun>& runs, std::string& error) {
  fs::create_directories(dir);
  for (auto& run : runs) {
    run.config.output_path = (dir / (run.name + ".csv")).string();
    std::ostringstream out, err;
    if (ex::run_command(run.command, run.config, out, err) != ex::kExitOk) {
      error = run.name + ": " + err.str();
      return false;
    }
  }
  return true;
}

// ---- criterion 5 ----------------------------------------------------------

Outcome mc_agreement(const fs::path& dir, double elapsed) {
  const auto csv = read_csv(dir / "mc_vs_exact.csv");
  const auto params = ModelParams::uniform(2, 1, 0.6, 0.5, 6);
  const auto x0 = SystemState::fresh(2);
  Outcome out;
  oracle::RuleValue delta({1, 0.6, params.q, 6}, [](int, const oracle::Plain& x) { return oracle::delta_action(x, 1); });
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto name = csv.str(r, "policy");
    const double exact = evaluate_policy(*make_policy(name, params, x0), params, x0).value(1, x0);
    if (name == "delta" && std::abs(exact - delta.value(1, oracle::to_plain(x0))) > kValueTol) out.pass = false;
    const double mean = csv.num(r, "mean_total_cost");
    const double se = csv.num(r, "stderr");
    const double z = std::abs(mean - exact) / se;
    if (!(z <= kMcSigmas)) out.pass = false;
    out.detail += name + " |mean-exact|/se=" + fmt(z) + "; ";
  }
  if (csv.rows.size() != 3) out.pass = false;
  if (elapsed >= 120.0) out.pass = false;
  out.detail += fmt(elapsed) + " s";
  return out;
}

// ---- criterion 6 ----------------------------------------------------------

Outcome degenerate_closed_form() {
  auto params = ModelParams::uniform(3, 2, 0.0, 0.0, 10);
  params.q = {0.15, 0.6, 1.0};
  const auto x0 = SystemState::parse("g=[1,psi,0];h=[4,2,3]");
  const auto expected = oracle::no_success_cost({4, 2, 3}, 10);
  Outcome out;
  out.detail = "closed form " + std::to_string(expected);
  for (auto name : kPolicyNames) {
    const auto policy = make_policy(name, params, x0);
    const double exact = evaluate_policy(*policy, params, x0).value(1, x0);
    if (exact != static_cast<double>(expected)) out.pass = false;
    const auto summary = run_experiment(*policy, params, x0, 50, 7);
    for (auto c : summary.episode_costs) {
      if (c != expected) out.pass = false;
    }
    out.detail += ", " + std::string(name) + " ok";
  }
  if (solve_optimal(params, x0).value(1, x0) != static_cast<double>(expected)) out.pass = false;
  return out;
}

// ---- criterion 7 ----------------------------------------------------------

Outcome trends(const fs::path& dir, double elapsed) {
  Outcome out;
  std::string detail;

  // (a) delta over pi at p = 0.2, 0.5, 0.8.
  const auto a = read_csv(dir / "trend_p.csv");
  std::map<double, std::pair<double, double>> over_pi;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    if (a.str(r, "policy") != "pi") continue;
    over_pi[a.num(r, "p")] = {a.num(r, "first_policy_improvement_pct"),
                              a.num(r, "first_policy_improvement_stderr_pct")};
  }
  bool pass_a = over_pi.size() == 3;
  for (const auto& [p, imp] : over_pi) {
    if (imp.first + kTrendSigmas * imp.second < 0.0) pass_a = false;
  }
  if (pass_a) pass_a = over_pi.at(0.8).first > over_pi.at(0.2).first;
  detail += std::string("(a) ") + (pass_a ? "pass" : "FAIL") + ": over pi p=0.2 " + fmt(over_pi[0.2].first) +
            "%, p=0.5 " + fmt(over_pi[0.5].first) + "%, p=0.8 " + fmt(over_pi[0.8].first) + "%";

  // (b) delta over rr along N.
  const auto b = read_csv(dir / "trend_n_N.csv");
  std::map<int, double> over_rr;
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    over_rr[static_cast<int>(b.num(r, "N"))] = b.num(r, "improvement_delta_over_rr_pct");
  }
  bool pass_b = over_rr.size() == 3;
  for (const auto& [n, v] : over_rr) {
    if (!std::isfinite(v)) pass_b = false;
  }
  if (pass_b) pass_b = over_rr.at(100) <= kRrTailMaxPct && over_rr.at(100) < over_rr.at(5);
  detail += std::string("; (b) ") + (pass_b ? "pass" : "FAIL") + ": over rr N=5 " + fmt(over_rr[5]) +
            "%, N=25 " + fmt(over_rr[25]) + "%, N=100 " + fmt(over_rr[100]) + "% (max " + fmt(kRrTailMaxPct) + "%)";

  // (c) d = 3.
  const auto c = read_csv(dir / "trend_multichannel.csv");
  double multi = 0.0;
  for (std::size_t r = 0; r < c.rows.size(); ++r) {
    if (c.str(r, "policy") == "pi") multi = c.num(r, "first_policy_improvement_pct");
  }
  const bool pass_c = multi >= kMultiChannelMinPct;
  detail += std::string("; (c) ") + (pass_c ? "pass" : "FAIL") + ": over pi " + fmt(multi) + "% (min " +
            fmt(kMultiChannelMinPct) + "%)";

  out.pass = pass_a && pass_b && pass_c && elapsed < 600.0;
  out.detail = detail + "; " + fmt(elapsed) + " s";
  return out;
}

// ---- criterion 8 ----------------------------------------------------------

Outcome determinism(const fs::path& first, const fs::path& second, const std::vector<DataRun>& runs) {
  Outcome out;
  std::size_t files = 0;
  for (const auto& run : runs) {
    for (const auto& f : run.files) {
      ++files;
      const auto a = slurp(first / f);
      const auto b = slurp(second / f);
      if (a.empty() || a != b) {
        out.pass = false;
        out.detail += f + " differs; ";
      }
    }
  }
  out.detail += std::to_string(files) + " files compared byte for byte";
  return out;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << " -- " << o.detail << std::endl;
    results.emplace_back(name, o);
  };

  const fs::path root = fs::temp_directory_path() / "aoi_sched_acceptance";
  fs::remove_all(root);

  record("1 exact-identity suite", exact_identities);
  record("2 optimality gap at desk scale", gap_desk_scale);
  record("3 gap scales as p^2", gap_scaling);
  record("4 closed form one stage before the horizon", penultimate_closed_form);

  auto first_runs = data_runs();
  std::string error;
  const auto start = Clock::now();
  const bool produced = produce(root / "first", first_runs, error);
  const double produce_time = seconds_since(start);

  // produce_time covers every data run, so it over-counts for criterion 5.
  record("5 Monte Carlo agrees with exact evaluation", [&] {
    return produced ? mc_agreement(root / "first", produce_time) : Outcome{false, error};
  });
  record("6 no-success closed form", degenerate_closed_form);
  record("7 improvement trends", [&] {
    return produced ? trends(root / "first", produce_time) : Outcome{false, error};
  });
  record("8 byte-identical reruns", [&] {
    auto again = data_runs();
    std::string err2;
    if (!produced || !produce(root / "second", again, err2)) return Outcome{false, error + err2};
    return determinism(root / "first", root / "second", again);
  });

  int failed = 0;
  for (const auto& [name, o] : results) failed += !o.pass;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
