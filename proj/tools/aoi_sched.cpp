// aoi-sched: simulate, solve, sweep and verify from a config file plus flags.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aoi/experiments/commands.hpp"

namespace ex = aoi::experiments;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::string> seed;
  std::optional<std::string> format;
  bool no_header_timestamp = false;
  std::optional<std::string> policies;
  std::optional<std::string> rr_mode;
  std::optional<std::string> n_sources;
  std::optional<std::string> n_channels;
  std::optional<std::string> p;
  std::optional<std::string> q;
  std::optional<std::string> horizon;
  std::optional<std::string> initial_state;
  std::optional<std::string> replications;
  std::optional<std::string> grid_p;
  std::optional<std::string> grid_n;
  std::optional<std::string> grid_d;
  std::optional<std::string> threads;
  std::optional<std::string> state_cap;
  std::optional<std::string> fault;
  std::vector<std::string> sets;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "Config file");
  cmd->add_option("--out", f.out, "Output path (stdout when omitted)");
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--format", f.format, "csv or json");
  cmd->add_flag("--no-header-timestamp", f.no_header_timestamp, "Omit the generated_at line");
  cmd->add_option("--policies", f.policies, "Comma-separated policy names");
  cmd->add_option("--rr-mode", f.rr_mode, "work-conserving or strict");
  cmd->add_option("-N,--n-sources", f.n_sources, "Number of sources");
  cmd->add_option("-d,--n-channels", f.n_channels, "Number of channels");
  cmd->add_option("-p,--p", f.p, "Channel success probability");
  cmd->add_option("--q", f.q, "Arrival probabilities: uniform:<v> or a list");
  cmd->add_option("-T,--horizon", f.horizon, "Horizon");
  cmd->add_option("--initial-state", f.initial_state, "default or g=[..];h=[..]");
  cmd->add_option("--replications", f.replications, "Monte Carlo episodes per policy");
  cmd->add_option("--grid-p", f.grid_p, "p grid");
  cmd->add_option("--grid-n", f.grid_n, "N grid");
  cmd->add_option("--grid-d", f.grid_d, "d grid");
  cmd->add_option("--threads", f.threads, "Worker threads (0 = auto)");
  cmd->add_option("--state-cap", f.state_cap, "Exact-solver state cap");
  cmd->add_option("--inject-fault", f.fault, "Test hook for verify: success-skips-aging");
  cmd->add_option("--set", f.sets, "Override any setting as section.key=value");
}

ex::SweepConfig build_config(const Flags& f) {
  ex::SweepConfig c = f.config_path.empty() ? ex::SweepConfig{} : ex::load_config(f.config_path);

  if (const char* env = std::getenv("AOI_SCHED_THREADS"); env && *env && !f.threads) {
    ex::apply_setting(c, "run", "threads", env);
  }

  auto set = [&](const char* section, const char* key, const std::optional<std::string>& v) {
    if (v) ex::apply_setting(c, section, key, *v);
  };
  set("output", "path", f.out);
  set("run", "base_seed", f.seed);
  set("output", "format", f.format);
  set("run", "policies", f.policies);
  set("run", "rr_mode", f.rr_mode);
  set("model", "n_sources", f.n_sources);
  set("model", "n_channels", f.n_channels);
  set("model", "p", f.p);
  set("model", "q", f.q);
  set("model", "horizon", f.horizon);
  set("model", "initial_state", f.initial_state);
  set("run", "replications", f.replications);
  set("grid", "p", f.grid_p);
  set("grid", "n_sources", f.grid_n);
  set("grid", "n_channels", f.grid_d);
  set("run", "threads", f.threads);
  set("run", "state_cap", f.state_cap);
  set("verify", "fault", f.fault);
  if (f.no_header_timestamp) c.header_timestamp = false;
  for (const auto& s : f.sets) ex::apply_override(c, s);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information scheduling: simulation, exact DP and verification"};
  app.require_subcommand(1);

  Flags flags;
  for (const char* name : {"simulate", "solve", "sweep", "verify"}) {
    auto* cmd = app.add_subcommand(name);
    add_flags(cmd, flags);
  }
  app.get_subcommand("simulate")->description("Monte Carlo comparison of policies per grid point");
  app.get_subcommand("solve")->description("Exact DP values and the optimality-gap report");
  app.get_subcommand("sweep")->description("One CSV per swept axis with per-policy means");
  app.get_subcommand("verify")->description("Run the numeric identity and gap checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kExitConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  ex::SweepConfig config;
  try {
    config = build_config(flags);
  } catch (const aoi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ex::kExitConfigError;
  }
  return ex::run_command(command, std::move(config), std::cout, std::cerr);
}
