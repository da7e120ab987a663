#pragma once

// The four CLI commands. Each builds its data in memory, in grid order, and
// then writes it in one pass, so output does not depend on thread count.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "aoi/experiments/config.hpp"
#include "aoi/verification.hpp"
#include "json.hpp"

namespace aoi::experiments {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitVerifyFailed = 2,
  kExitResourceCap = 3,
};

using Cell = std::variant<std::monostate, std::string, std::int64_t, std::uint64_t, double, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// `%.6g`.
std::string format_number(double value);
std::string format_cell(const Cell& cell);

/// UTC time as `YYYY-MM-DDTHH:MM:SSZ`.
std::string utc_timestamp();

void write_csv(const Table& table, std::ostream& out, bool header_timestamp);
nlohmann::ordered_json table_to_json(const Table& table);

/// simulate: one row per (grid point, policy).
Table simulate_table(const SweepConfig& config);

/// solve: one record per grid point with exact values and the gap report.
nlohmann::ordered_json solve_report(const SweepConfig& config);

/// sweep: one table per axis that has a grid, keyed by axis name (p, N, d).
std::vector<std::pair<std::string, Table>> sweep_tables(const SweepConfig& config);

/// File name for one sweep axis: `<stem>_<axis><ext>`.
std::string sweep_file_name(const std::string& output_path, const std::string& axis,
                            OutputFormat format);

/// Each command writes to config.output_path, or to `out` when it is empty.
int cmd_simulate(const SweepConfig& config, std::ostream& out);
int cmd_solve(const SweepConfig& config, std::ostream& out);
int cmd_sweep(const SweepConfig& config, std::ostream& out);
int cmd_verify(const SweepConfig& config, std::ostream& out);

/// Validates the config, runs the named command and maps errors to exit codes;
/// diagnostics go to `err`.
int run_command(const std::string& command, SweepConfig config, std::ostream& out,
                std::ostream& err);

}  // namespace aoi::experiments
