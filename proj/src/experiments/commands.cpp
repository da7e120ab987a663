#include "aoi/experiments/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <ostream>

#include "aoi/dp_solver.hpp"
#include "aoi/simulator.hpp"

namespace aoi::experiments {

using nlohmann::ordered_json;

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error("table row has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, cell);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

ordered_json cell_json(const Cell& cell) {
  struct Visitor {
    ordered_json operator()(std::monostate) const { return nullptr; }
    ordered_json operator()(const std::string& s) const { return s; }
    ordered_json operator()(std::int64_t v) const { return v; }
    ordered_json operator()(std::uint64_t v) const { return v; }
    ordered_json operator()(double v) const { return v; }
    ordered_json operator()(bool v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

std::string join_q(const std::vector<double>& q) {
  std::string out;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (i) out += ';';
    out += format_number(q[i]);
  }
  return out;
}

std::vector<std::unique_ptr<SchedulingPolicy>> build_policies(const SweepConfig& c,
                                                              const GridPoint& point) {
  DpOptions options;
  options.state_cap = c.state_cap;
  std::vector<std::unique_ptr<SchedulingPolicy>> out;
  for (const auto& name : c.policies) {
    if (name == "optimal") {
      auto table = std::make_shared<const DpTable>(solve_optimal(point.params, point.x0, options));
      out.push_back(std::make_unique<DpPolicy>(std::move(table)));
    } else {
      out.push_back(make_policy(name, point.params, point.x0, c.rr_mode));
    }
  }
  return out;
}

PolicyComparison run_point(const SweepConfig& c, const GridPoint& point) {
  const auto owned = build_policies(c, point);
  if (owned.size() == 1) {
    PolicyComparison single;
    single.summaries.push_back(run_experiment(*owned[0], point.params, point.x0,
                                              c.replications, point.seed, c.threads));
    return single;
  }
  std::vector<const SchedulingPolicy*> policies;
  for (const auto& p : owned) policies.push_back(p.get());
  return compare_policies(policies, point.params, point.x0, c.replications, point.seed, c.threads);
}

std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty()) return fallback;
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open output file '" + path + "'");
  return file;
}

void finish(std::ofstream& file, const std::string& path) {
  if (!file.is_open()) return;
  file.close();
  if (!file) throw IoError("failed writing '" + path + "'");
}

void write_table(const SweepConfig& c, const Table& table, std::ostream& out) {
  if (c.format == OutputFormat::Json) {
    ordered_json doc = ordered_json::object();
    if (c.header_timestamp) doc["generated_at"] = utc_timestamp();
    doc["rows"] = table_to_json(table);
    out << doc.dump(2) << '\n';
  } else {
    write_csv(table, out, c.header_timestamp);
  }
}

}  // namespace

void write_csv(const Table& table, std::ostream& out, bool header_timestamp) {
  if (header_timestamp) out << "# generated_at=" << utc_timestamp() << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << csv_escape(table.columns[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << csv_escape(format_cell(row[i]));
    }
    out << '\n';
  }
}

ordered_json table_to_json(const Table& table) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json obj = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(obj));
  }
  return rows;
}

Table simulate_table(const SweepConfig& c) {
  Table table;
  table.columns = {"N", "d", "p", "T", "q_spec", "q", "policy", "replications",
                   "mean_total_cost", "stderr", "mean_sum_aaoi", "seed",
                   "first_policy_improvement_pct", "first_policy_improvement_stderr_pct"};
  for (const auto& point : expand_grid(c)) {
    const auto cmp = run_point(c, point);
    for (std::size_t i = 0; i < cmp.summaries.size(); ++i) {
      const auto& s = cmp.summaries[i];
      Cell imp, imp_se;
      if (i == 0) {
        imp = 0.0;
        imp_se = 0.0;
      } else {
        const auto im = cmp.improvement_of(0, i);
        imp = im.percent;
        imp_se = im.stderr_percent;
      }
      table.add_row({std::int64_t{point.params.n_sources}, std::int64_t{point.params.n_channels},
                     point.params.p, std::int64_t{point.params.horizon}, point.q_spec,
                     join_q(point.params.q), s.policy, std::int64_t{s.replications},
                     s.mean_total_cost, s.stderr_total_cost, s.mean_sum_aaoi, point.seed, imp,
                     imp_se});
    }
  }
  return table;
}

ordered_json solve_report(const SweepConfig& c) {
  DpOptions options;
  options.state_cap = c.state_cap;
  ordered_json records = ordered_json::array();
  for (const auto& point : expand_grid(c)) {
    const auto& params = point.params;
    const auto gap = theorem1_gap(params, point.x0, options);

    ordered_json rec = ordered_json::object();
    rec["N"] = params.n_sources;
    rec["d"] = params.n_channels;
    rec["p"] = params.p;
    rec["T"] = params.horizon;
    rec["q_spec"] = point.q_spec;
    rec["q"] = params.q;
    rec["x0"] = point.x0.to_string();
    rec["v_optimal"] = gap.v_optimal;
    ordered_json values = ordered_json::object();
    for (const auto& name : c.policies) {
      if (name == "optimal") {
        values[name] = gap.v_optimal;
      } else if (name == "delta") {
        values[name] = gap.v_delta;
      } else {
        const auto policy = make_policy(name, params, point.x0, c.rr_mode);
        values[name] = evaluate_policy(*policy, params, point.x0, options).value(1, point.x0);
      }
    }
    rec["policy_values"] = std::move(values);
    rec["v_delta"] = gap.v_delta;
    rec["diff"] = gap.diff;
    rec["p_pd"] = gap.p_pd;
    rec["z"] = gap.z ? ordered_json(*gap.z) : ordered_json(nullptr);
    rec["norm_inf_x0"] = gap.norm_inf_x0;
    rec["bound"] = gap.bound;
    if (gap.constants) {
      rec["bound_constants"] = {{"k", gap.constants->k},   {"C1", gap.constants->c1},
                                {"C2", gap.constants->c2}, {"D1", gap.constants->d1},
                                {"D2", gap.constants->d2}};
      rec["z_bound"] = gap.constants->d1 * static_cast<double>(gap.norm_inf_x0) + gap.constants->d2;
    } else {
      rec["bound_constants"] = nullptr;
      rec["z_bound"] = 0.0;
    }
    rec["bound_holds"] = gap.bound_holds();
    rec["stage_max_gap"] = gap.stage_max_gap;
    rec["stage_min_gap"] = gap.stage_min_gap;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<std::pair<std::string, Table>> sweep_tables(const SweepConfig& c) {
  struct Axis {
    std::string name;
    std::vector<GridPoint> points;
  };
  std::vector<Axis> axes;
  if (!c.grid_p.empty()) {
    Axis a{"p", {}};
    for (double p : c.grid_p) a.points.push_back(make_point(c, c.n_sources, c.n_channels, p));
    axes.push_back(std::move(a));
  }
  if (!c.grid_n.empty()) {
    Axis a{"N", {}};
    for (int n : c.grid_n) a.points.push_back(make_point(c, n, c.n_channels, c.p));
    axes.push_back(std::move(a));
  }
  if (!c.grid_d.empty()) {
    Axis a{"d", {}};
    for (int d : c.grid_d) a.points.push_back(make_point(c, c.n_sources, d, c.p));
    axes.push_back(std::move(a));
  }
  if (axes.empty()) throw ConfigError("grid", 0, "sweep needs at least one of grid.p, grid.N, grid.d");

  std::vector<std::pair<std::string, Table>> out;
  for (const auto& axis : axes) {
    Table table;
    table.columns = {"axis", "N", "d", "p", "T", "q_spec", "replications", "seed"};
    for (const auto& name : c.policies) {
      table.columns.push_back("mean_" + name);
      table.columns.push_back("stderr_" + name);
      table.columns.push_back("aaoi_" + name);
    }
    const auto& first = c.policies.front();
    for (std::size_t j = 1; j < c.policies.size(); ++j) {
      table.columns.push_back("improvement_" + first + "_over_" + c.policies[j] + "_pct");
      table.columns.push_back("improvement_" + first + "_over_" + c.policies[j] + "_stderr_pct");
    }
    for (const auto& point : axis.points) {
      const auto cmp = run_point(c, point);
      std::vector<Cell> row{axis.name,
                            std::int64_t{point.params.n_sources},
                            std::int64_t{point.params.n_channels},
                            point.params.p,
                            std::int64_t{point.params.horizon},
                            point.q_spec,
                            std::int64_t{c.replications},
                            point.seed};
      for (const auto& s : cmp.summaries) {
        row.emplace_back(s.mean_total_cost);
        row.emplace_back(s.stderr_total_cost);
        row.emplace_back(s.mean_sum_aaoi);
      }
      for (std::size_t j = 1; j < cmp.summaries.size(); ++j) {
        const auto im = cmp.improvement_of(0, j);
        row.emplace_back(im.percent);
        row.emplace_back(im.stderr_percent);
      }
      table.add_row(std::move(row));
    }
    out.emplace_back(axis.name, std::move(table));
  }
  return out;
}

std::string sweep_file_name(const std::string& output_path, const std::string& axis,
                            OutputFormat format) {
  const std::string ext = format == OutputFormat::Json ? ".json" : ".csv";
  std::string stem = output_path;
  const auto slash = stem.find_last_of('/');
  const auto dot = stem.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) stem.resize(dot);
  return stem + "_" + axis + ext;
}

int cmd_simulate(const SweepConfig& c, std::ostream& out) {
  const auto table = simulate_table(c);
  std::ofstream file;
  write_table(c, table, open_output(c.output_path, file, out));
  finish(file, c.output_path);
  return kExitOk;
}

int cmd_solve(const SweepConfig& c, std::ostream& out) {
  const auto records = solve_report(c);
  std::ofstream file;
  auto& sink = open_output(c.output_path, file, out);
  if (c.format == OutputFormat::Json) {
    ordered_json doc = ordered_json::object();
    if (c.header_timestamp) doc["generated_at"] = utc_timestamp();
    doc["points"] = records;
    sink << doc.dump(2) << '\n';
  } else {
    // Scalar fields only; per-stage arrays and the bound constants need JSON.
    Table table;
    for (const auto& [key, value] : records.front().items()) {
      if (!value.is_structured()) table.columns.push_back(key);
    }
    for (const auto& rec : records) {
      std::vector<Cell> row;
      for (const auto& key : table.columns) {
        const auto& v = rec.at(key);
        if (v.is_null()) {
          row.emplace_back(std::monostate{});
        } else if (v.is_boolean()) {
          row.emplace_back(v.get<bool>());
        } else if (v.is_number_integer()) {
          row.emplace_back(v.get<std::int64_t>());
        } else if (v.is_number()) {
          row.emplace_back(v.get<double>());
        } else {
          row.emplace_back(v.get<std::string>());
        }
      }
      table.add_row(std::move(row));
    }
    write_csv(table, sink, c.header_timestamp);
  }
  finish(file, c.output_path);
  return kExitOk;
}

int cmd_sweep(const SweepConfig& c, std::ostream& out) {
  const auto tables = sweep_tables(c);
  for (const auto& [axis, table] : tables) {
    if (c.output_path.empty()) {
      out << "# axis=" << axis << '\n';
      write_table(c, table, out);
      continue;
    }
    const auto path = sweep_file_name(c.output_path, axis, c.format);
    std::ofstream file;
    write_table(c, table, open_output(path, file, out));
    finish(file, path);
  }
  return kExitOk;
}

int cmd_verify(const SweepConfig& c, std::ostream& out) {
  const auto report = run_verification(c.verify);
  std::ofstream file;
  auto& sink = open_output(c.output_path, file, out);
  if (c.format == OutputFormat::Json) {
    ordered_json doc = ordered_json::object();
    if (c.header_timestamp) doc["generated_at"] = utc_timestamp();
    const auto body = report.to_json();
    for (const auto& [key, value] : body.items()) doc[key] = value;
    sink << doc.dump(2) << '\n';
  } else {
    Table table;
    table.columns = {"check", "status", "measured", "detail"};
    for (const auto& check : report.checks) {
      table.add_row({check.name, std::string(to_string(check.status)), check.measured.dump(),
                     check.detail});
    }
    write_csv(table, sink, c.header_timestamp);
  }
  finish(file, c.output_path);
  return report.passed() ? kExitOk : kExitVerifyFailed;
}

int run_command(const std::string& command, SweepConfig config, std::ostream& out,
                std::ostream& err) {
  try {
    validate(config);
    if (command == "simulate") return cmd_simulate(config, out);
    if (command == "solve") return cmd_solve(config, out);
    if (command == "sweep") return cmd_sweep(config, out);
    if (command == "verify") return cmd_verify(config, out);
    err << "error: unknown command '" << command << "'\n";
    return kExitConfigError;
  } catch (const StateSpaceTooLarge& e) {
    err << "error: " << e.what() << '\n';
    return kExitResourceCap;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace aoi::experiments
