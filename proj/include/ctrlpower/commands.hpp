#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctrlpower/allocator.hpp"
#include "ctrlpower/csv.hpp"
#include "ctrlpower/error.hpp"
#include "ctrlpower/io.hpp"
#include "ctrlpower/loopsim.hpp"
#include "ctrlpower/scenario.hpp"
#include "ctrlpower/units.hpp"

// Command implementations behind the ctrlpower executable. Each returns the
// process exit code and writes only to the streams it is handed.

namespace ctrlpower::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalid = 2,
  kInfeasible = 3,
  kNumerical = 4,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InfeasibleStability: return kInfeasible;
    case ErrorCode::NoConvergence:
    case ErrorCode::SingularInnerMatrix:
    case ErrorCode::StabilityUnattainable:
    case ErrorCode::BelowStabilityThreshold:
    case ErrorCode::UnstableClosedLoop: return kNumerical;
    default: return kInvalid;
  }
}

struct PowerRange {
  double lo_dbw = -10.0;
  double hi_dbw = 20.0;
  double step_db = 1.0;

  std::vector<double> points() const {
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((hi_dbw - lo_dbw) / step_db + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) out.push_back(lo_dbw + step_db * static_cast<double>(i));
    return out;
  }
};

inline PowerRange parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3) throw Error(ErrorCode::Validation, "power range must be lo:hi:step, got " + text);
  PowerRange r;
  try {
    r.lo_dbw = std::stod(parts[0]);
    r.hi_dbw = std::stod(parts[1]);
    r.step_db = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Validation, "power range must be numeric: " + text);
  }
  if (!(r.step_db > 0.0) || !(r.lo_dbw <= r.hi_dbw)) {
    throw Error(ErrorCode::Validation, "power range needs lo <= hi and step > 0: " + text);
  }
  return r;
}

inline std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const auto m = parse_method(name);
    if (!m) throw Error(ErrorCode::Validation, "unknown method: " + name);
    out.push_back(*m);
  }
  if (out.empty()) throw Error(ErrorCode::Validation, "no methods given");
  return out;
}

inline const char* short_name(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::closed_form: return "closed";
    case Method::water_filling: return "wf";
    case Method::brute_force: return "brute";
  }
  return "?";
}

inline int report_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (const auto* inf = dynamic_cast<const InfeasibleError*>(&e)) {
    err << "deficit_w: " << format_number(inf->deficit_w()) << "\n";
    if (!inf->offending_loops().empty()) {
      err << "offending loops:";
      for (auto k : inf->offending_loops()) err << ' ' << k;
      err << "\n";
    }
  }
  return exit_code_for(e.code());
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return report_error(e, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }
}

// ---- gen -------------------------------------------------------------------

inline int cmd_gen(const std::string& spec_path, const std::string& out_path, double pmax_dbw,
                   std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioSpec spec = load_spec(spec_path);
    Scenario sc = generate_scenario(spec);
    sc.problem.p_max_w = dbw_to_watts(pmax_dbw);
    save_scenario(out_path, sc);
    out << "wrote " << sc.problem.size() << " loops to " << out_path << "\n";
    return int{kOk};
  });
}

// ---- solve -----------------------------------------------------------------

inline void print_table(const AllocationProblem& problem, const AllocationResult& r, std::ostream& out) {
  out << "method " << to_string(r.method) << ", p_max " << format_number(problem.p_max_w) << " W ("
      << format_number(watts_to_dbw(problem.p_max_w)) << " dBW)\n";
  out << std::left << std::setw(6) << "loop" << std::setw(20) << "gain" << std::setw(20) << "h_bits"
      << std::setw(20) << "p_min_w" << std::setw(20) << "p_w" << "lqr_cost\n";
  for (std::size_t k = 0; k < problem.size(); ++k) {
    const auto& c = problem.loops[k].curve();
    out << std::setw(6) << k << std::setw(20) << format_number(c.gain()) << std::setw(20)
        << format_number(c.h_bits()) << std::setw(20) << format_number(c.p_min_w()) << std::setw(20)
        << format_number(r.powers_w[k]) << format_number(r.lqr_costs[k]) << "\n";
  }
  out << "total_power_w " << format_number(r.power_sum()) << "\n";
  out << "total_lqr_cost " << format_number(r.total_cost) << "\n";
  out << "floor " << format_number(problem.floor_cost()) << "\n";
  out << "lambda " << format_number(r.lambda) << "\n";
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
}

inline std::string default_result_path(const std::string& scenario_path) {
  const std::string suffix = ".json";
  std::string stem = scenario_path;
  if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
    stem.resize(stem.size() - suffix.size());
  }
  return stem + ".result.json";
}

inline int cmd_solve(const std::string& scenario_path, Method method, std::optional<double> pmax_dbw,
                     const std::string& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario sc = load_scenario(scenario_path);
    if (pmax_dbw) sc.problem.p_max_w = dbw_to_watts(*pmax_dbw);
    const AllocationResult r = solve(sc.problem, method);
    save_result(out_path.empty() ? default_result_path(scenario_path) : out_path, r);
    print_table(sc.problem, r, out);
    return int{kOk};
  });
}

// ---- sweep -----------------------------------------------------------------

inline std::string sweep_header(std::size_t K) {
  std::vector<std::string> cells{"p_max_dbw", "method", "total_lqr_cost"};
  for (std::size_t k = 1; k <= K; ++k) cells.push_back("p_" + std::to_string(k));
  cells.push_back("floor");
  return csv_row(cells);
}

inline std::string sweep_csv(AllocationProblem problem, const PowerRange& range,
                             const std::vector<Method>& methods) {
  const std::size_t K = problem.size();
  const std::string floor = format_number(problem.floor_cost());
  std::string text = sweep_header(K);
  for (double dbw : range.points()) {
    problem.p_max_w = dbw_to_watts(dbw);
    for (Method m : methods) {
      std::vector<std::string> cells{format_number(dbw), short_name(m)};
      try {
        const auto r = solve(problem, m);
        cells.push_back(format_number(r.total_cost));
        for (double p : r.powers_w) cells.push_back(format_number(p));
      } catch (const InfeasibleError&) {
        cells.push_back("infeasible");
        cells.resize(cells.size() + K);
      }
      cells.push_back(floor);
      text += csv_row(cells);
    }
  }
  return text;
}

inline int cmd_sweep(const std::string& scenario_path, const std::string& range_text,
                     const std::string& methods_text, const std::string& out_path, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    const PowerRange range = parse_range(range_text);
    const auto methods = parse_methods(methods_text);
    const Scenario sc = load_scenario(scenario_path);
    const std::string csv = sweep_csv(sc.problem, range, methods);
    if (out_path.empty()) {
      out << csv;
    } else {
      write_text_file(out_path, csv);
    }
    return int{kOk};
  });
}

// ---- compare ---------------------------------------------------------------

/// Loop indices ordered by descending channel gain (ties keep file order).
inline std::vector<std::size_t> by_descending_gain(const AllocationProblem& problem) {
  std::vector<std::size_t> order(problem.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return problem.loops[a].channel().gain > problem.loops[b].channel().gain;
  });
  return order;
}

inline std::string compare_csv(const AllocationProblem& problem, const std::vector<Method>& methods) {
  std::vector<std::string> header{"channel", "loop", "gain", "h_bits", "p_min_w"};
  std::vector<std::vector<std::string>> columns;
  for (Method m : methods) {
    header.push_back(to_string(m));
    std::vector<std::string> col;
    try {
      const auto r = solve(problem, m);
      for (double p : r.powers_w) col.push_back(format_number(p));
    } catch (const InfeasibleError&) {
      col.assign(problem.size(), "infeasible");
    }
    columns.push_back(std::move(col));
  }
  std::string text = csv_row(header);
  const auto order = by_descending_gain(problem);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t k = order[rank];
    const auto& c = problem.loops[k].curve();
    std::vector<std::string> row{std::to_string(rank + 1), std::to_string(k), format_number(c.gain()),
                                 format_number(c.h_bits()), format_number(c.p_min_w())};
    for (const auto& col : columns) row.push_back(col[k]);
    text += csv_row(row);
  }
  return text;
}

inline int cmd_compare(const std::string& scenario_path, std::optional<double> pmax_dbw,
                       const std::string& methods_text, const std::string& out_path, std::ostream& out,
                       std::ostream& err) {
  return guarded(err, [&] {
    const auto methods = parse_methods(methods_text);
    Scenario sc = load_scenario(scenario_path);
    if (pmax_dbw) sc.problem.p_max_w = dbw_to_watts(*pmax_dbw);
    const std::string csv = compare_csv(sc.problem, methods);
    if (out_path.empty()) {
      out << csv;
    } else {
      write_text_file(out_path, csv);
    }
    return int{kOk};
  });
}

// ---- validate --------------------------------------------------------------

inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      seeds.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Validation, "seeds must be comma-separated integers: " + text);
    }
  }
  if (seeds.empty()) throw Error(ErrorCode::Validation, "no seeds given");
  return seeds;
}

inline int cmd_validate(const std::string& scenario_path, long horizon, const std::string& seeds_text,
                        std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto seeds = parse_seeds(seeds_text);
    if (horizon < 1) throw Error(ErrorCode::Validation, "horizon must be >= 1");
    const auto loops = raw_loops_from_json(read_json_file(scenario_path));
    int code = kOk;
    out << csv_row({"loop", "seed", "horizon", "empirical_cost", "predicted_floor", "rel_error", "status"});
    for (std::size_t k = 0; k < loops.size(); ++k) {
      for (auto seed : seeds) {
        try {
          const SimReport rep = simulate_ideal(loops[k].plant, horizon, seed);
          out << csv_row({std::to_string(k), std::to_string(seed), std::to_string(horizon),
                          format_number(rep.empirical_cost), format_number(rep.predicted_floor),
                          format_number(rep.rel_error), "ok"});
        } catch (const Error& e) {
          out << csv_row({std::to_string(k), std::to_string(seed), std::to_string(horizon), "", "", "",
                          to_string(e.code())});
          err << "loop " << k << ": " << e.what() << "\n";
          code = std::max(code, exit_code_for(e.code()));
        }
      }
    }
    return code;
  });
}

// ---- entry point -----------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Control-oriented transmit power allocation for wireless control loops"};
  app.require_subcommand(1);

  std::string spec_path, scenario_path, out_path, methods = "exact,closed,wf";
  std::string range = "-10:20:1", seeds = "1";
  std::string method_name = "exact";
  double gen_pmax_dbw = 5.0;
  std::optional<double> pmax_dbw;
  long horizon = 100000;

  auto* gen = app.add_subcommand("gen", "Generate a scenario file from a generator spec");
  gen->add_option("spec-file", spec_path, "Generator spec (JSON; missing fields use defaults)")->required();
  gen->add_option("out-file", out_path, "Scenario file to write")->required();
  gen->add_option("--pmax-dbw", gen_pmax_dbw, "Budget stored in the scenario, dBW");

  auto* solve_cmd = app.add_subcommand("solve", "Allocate power for one budget");
  solve_cmd->add_option("scenario-file", scenario_path)->required();
  solve_cmd->add_option("--method", method_name, "exact | closed | wf | brute")
      ->check(CLI::IsMember({"exact", "closed", "wf", "brute"}));
  solve_cmd->add_option("--pmax-dbw", pmax_dbw, "Override the scenario budget, dBW");
  solve_cmd->add_option("--out", out_path, "Result file (default: <scenario>.result.json)");

  auto* sweep = app.add_subcommand("sweep", "Total LQR cost over a range of budgets (CSV)");
  sweep->add_option("scenario-file", scenario_path)->required();
  sweep->add_option("--pmax-range", range, "lo:hi:step in dBW (use --pmax-range=-10:20:1)");
  sweep->add_option("--methods", methods, "Comma-separated methods");
  sweep->add_option("--out", out_path, "CSV file (default: standard output)");

  auto* compare = app.add_subcommand("compare", "Per-channel allocations by method (CSV)");
  compare->add_option("scenario-file", scenario_path)->required();
  compare->add_option("--pmax-dbw", pmax_dbw, "Override the scenario budget, dBW");
  compare->add_option("--methods", methods, "Comma-separated methods");
  compare->add_option("--out", out_path, "CSV file (default: standard output)");

  auto* val = app.add_subcommand("validate", "Monte Carlo check of each loop's cost floor");
  val->add_option("scenario-file", scenario_path)->required();
  val->add_option("--horizon", horizon, "Simulated cycles per run");
  val->add_option("--seeds", seeds, "Comma-separated seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }

  if (gen->parsed()) return cmd_gen(spec_path, out_path, gen_pmax_dbw, out, err);
  if (solve_cmd->parsed()) {
    return cmd_solve(scenario_path, *parse_method(method_name), pmax_dbw, out_path, out, err);
  }
  if (sweep->parsed()) return cmd_sweep(scenario_path, range, methods, out_path, out, err);
  if (compare->parsed()) return cmd_compare(scenario_path, pmax_dbw, methods, out_path, out, err);
  if (val->parsed()) return cmd_validate(scenario_path, horizon, seeds, out, err);
  return kInvalid;
}

}  // namespace ctrlpower::cli
