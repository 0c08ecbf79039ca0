#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ctrlpower/error.hpp"
#include "ctrlpower/loop.hpp"
#include "ctrlpower/scenario.hpp"

// JSON scenario and result documents. Matrices are row-major nested arrays,
// every quantity is SI, and non-finite costs are written as null.

namespace ctrlpower {

using json = nlohmann::ordered_json;

inline constexpr const char* kScenarioFormat = "ctrlpower-scenario";
inline constexpr const char* kResultFormat = "ctrlpower-result";
inline constexpr int kFormatVersion = 1;

namespace io_detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Schema, path + ": " + what);
}

inline const json& field(const json& obj, const char* name, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) schema_error(path, std::string("missing field \"") + name + "\"");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  return v.get<double>();
}

inline double number_or_inf(const json& v, const std::string& path) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  return number(v, path);
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_error(path, "expected an integer");
  return v.get<long long>();
}

inline double number_field(const json& obj, const char* name, const std::string& path) {
  return number(field(obj, name, path), path + "." + name);
}

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) schema_error(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array() || v[0].empty()) schema_error(path + "[0]", "expected a non-empty row");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    const std::string rpath = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      schema_error(rpath, "expected a row of " + std::to_string(cols) + " numbers");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = number(row[static_cast<std::size_t>(j)], rpath + "[" + std::to_string(j) + "]");
    }
  }
  return m;
}

inline std::vector<double> number_array(const json& v, const std::string& path, bool allow_null) {
  if (!v.is_array()) schema_error(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    out.push_back(allow_null ? number_or_inf(v[i], p) : number(v[i], p));
  }
  return out;
}

inline void check_format(const json& doc, const char* expected) {
  const auto& fmt = field(doc, "format", "$");
  if (!fmt.is_string() || fmt.get<std::string>() != expected) {
    schema_error("$.format", std::string("expected \"") + expected + "\"");
  }
  if (integer(field(doc, "version", "$"), "$.version") != kFormatVersion) {
    schema_error("$.version", "unsupported version");
  }
}

inline bool close_rel(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace io_detail

inline json spec_to_json(const ScenarioSpec& s) {
  json j;
  j["num_robots"] = s.num_robots;
  j["field_radius_m"] = s.field_radius_m;
  j["uav_height_m"] = s.uav_height_m;
  j["beta0_db"] = s.beta0_db;
  j["noise_dbm"] = s.noise_dbm;
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["cycle_s"] = s.cycle_s;
  j["state_dim"] = s.state_dim;
  j["h_range_bits"] = json::array({s.h_lo_bits, s.h_hi_bits});
  j["noise_variance"] = s.noise_variance;
  j["seed"] = s.seed;
  return j;
}

/// Fields absent from the document keep their defaults; unknown fields are
/// rejected so that typos do not silently fall back to defaults.
inline ScenarioSpec spec_from_json(const json& j, const std::string& path = "$") {
  using namespace io_detail;
  if (!j.is_object()) schema_error(path, "expected an object");
  ScenarioSpec s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const std::string p = path + "." + key;
    const json& v = it.value();
    if (key == "num_robots") s.num_robots = static_cast<int>(integer(v, p));
    else if (key == "field_radius_m") s.field_radius_m = number(v, p);
    else if (key == "uav_height_m") s.uav_height_m = number(v, p);
    else if (key == "beta0_db") s.beta0_db = number(v, p);
    else if (key == "noise_dbm") s.noise_dbm = number(v, p);
    else if (key == "bandwidth_hz") s.bandwidth_hz = number(v, p);
    else if (key == "cycle_s") s.cycle_s = number(v, p);
    else if (key == "state_dim") s.state_dim = static_cast<int>(integer(v, p));
    else if (key == "h_range_bits") {
      const auto range = number_array(v, p, false);
      if (range.size() != 2) schema_error(p, "expected [lo, hi]");
      s.h_lo_bits = range[0];
      s.h_hi_bits = range[1];
    } else if (key == "noise_variance") s.noise_variance = number(v, p);
    else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        schema_error(p, "expected a non-negative integer");
      }
      s.seed = v.get<std::uint64_t>();
    } else {
      schema_error(p, "unknown field");
    }
  }
  try {
    validate(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::Validation, path + ": " + e.what());
  }
  return s;
}

inline json plant_to_json(const PlantModel& p) {
  json j;
  j["A"] = io_detail::to_json(p.A);
  j["B"] = io_detail::to_json(p.B);
  j["Q"] = io_detail::to_json(p.Q);
  j["R"] = io_detail::to_json(p.R);
  j["Sigma"] = io_detail::to_json(p.Sigma);
  j["cycle_s"] = p.cycle_s;
  return j;
}

inline PlantModel plant_from_json(const json& j, const std::string& path) {
  using namespace io_detail;
  PlantModel p;
  p.A = matrix(field(j, "A", path), path + ".A");
  p.B = matrix(field(j, "B", path), path + ".B");
  p.Q = matrix(field(j, "Q", path), path + ".Q");
  p.R = matrix(field(j, "R", path), path + ".R");
  p.Sigma = matrix(field(j, "Sigma", path), path + ".Sigma");
  p.cycle_s = number_field(j, "cycle_s", path);
  return p;
}

inline json channel_to_json(const ChannelModel& c) {
  json j;
  j["gain"] = c.gain;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["noise_power_w"] = c.noise_power_w;
  return j;
}

inline ChannelModel channel_from_json(const json& j, const std::string& path) {
  using namespace io_detail;
  ChannelModel c;
  c.gain = number_field(j, "gain", path);
  c.bandwidth_hz = number_field(j, "bandwidth_hz", path);
  c.noise_power_w = number_field(j, "noise_power_w", path);
  return c;
}

inline json derived_to_json(const ControlLoop& loop) {
  json j;
  j["h_bits"] = loop.h_bits();
  j["entropy_power"] = loop.entropy_power();
  j["p_min_w"] = loop.p_min_w();
  j["cost_floor"] = loop.riccati().cost_floor;
  j["log_det_M_abs"] = io_detail::finite_or_null(loop.riccati().log_det_M_abs);
  return j;
}

/// Cached derived values are informational; if present they must agree with
/// recomputation from the plant and channel.
inline void check_derived(const ControlLoop& loop, const json& j, const std::string& path) {
  using namespace io_detail;
  const auto check = [&](const char* name, double actual) {
    auto it = j.find(name);
    if (it == j.end()) return;
    const double stored = number_or_inf(*it, path + "." + name);
    if (!close_rel(stored, actual, 1e-9)) {
      throw Error(ErrorCode::Validation, path + "." + name + ": stored value " +
                                             std::to_string(stored) + " disagrees with recomputed " +
                                             std::to_string(actual));
    }
  };
  if (!j.is_object()) schema_error(path, "expected an object");
  check("h_bits", loop.h_bits());
  check("entropy_power", loop.entropy_power());
  check("p_min_w", loop.p_min_w());
  check("cost_floor", loop.riccati().cost_floor);
}

inline json scenario_to_json(const Scenario& sc) {
  json doc;
  doc["format"] = kScenarioFormat;
  doc["version"] = kFormatVersion;
  doc["p_max_w"] = sc.problem.p_max_w;
  if (sc.spec) doc["generator"] = spec_to_json(*sc.spec);
  json loops = json::array();
  for (std::size_t k = 0; k < sc.problem.loops.size(); ++k) {
    const auto& loop = sc.problem.loops[k];
    json l;
    l["plant"] = plant_to_json(loop.plant());
    l["channel"] = channel_to_json(loop.channel());
    if (k < sc.placements.size()) {
      const auto& pl = sc.placements[k];
      l["placement"] = json{{"x_m", pl.x_m}, {"y_m", pl.y_m}, {"distance_m", pl.distance_m}};
    }
    l["derived"] = derived_to_json(loop);
    loops.push_back(std::move(l));
  }
  doc["loops"] = std::move(loops);
  return doc;
}

/// Plants and channels only, without building loops. Sigma only needs to be
/// semidefinite here (used by closed-loop simulation).
struct RawLoop {
  PlantModel plant;
  ChannelModel channel;
};

inline std::vector<RawLoop> raw_loops_from_json(const json& doc) {
  using namespace io_detail;
  check_format(doc, kScenarioFormat);
  const auto& loops = field(doc, "loops", "$");
  if (!loops.is_array() || loops.empty()) schema_error("$.loops", "expected a non-empty array");
  std::vector<RawLoop> out;
  for (std::size_t k = 0; k < loops.size(); ++k) {
    const std::string path = "$.loops[" + std::to_string(k) + "]";
    RawLoop raw{plant_from_json(field(loops[k], "plant", path), path + ".plant"),
                channel_from_json(field(loops[k], "channel", path), path + ".channel")};
    out.push_back(std::move(raw));
  }
  return out;
}

inline Scenario scenario_from_json(const json& doc) {
  using namespace io_detail;
  check_format(doc, kScenarioFormat);
  Scenario sc;
  sc.problem.p_max_w = number_field(doc, "p_max_w", "$");
  if (auto it = doc.find("generator"); it != doc.end()) sc.spec = spec_from_json(*it, "$.generator");

  const auto raw = raw_loops_from_json(doc);
  const auto& loops = doc["loops"];
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const std::string path = "$.loops[" + std::to_string(k) + "]";
    try {
      sc.problem.loops.emplace_back(raw[k].plant, raw[k].channel);
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
    if (auto it = loops[k].find("placement"); it != loops[k].end()) {
      Placement pl{number_field(*it, "x_m", path + ".placement"),
                   number_field(*it, "y_m", path + ".placement"),
                   number_field(*it, "distance_m", path + ".placement")};
      sc.placements.push_back(pl);
    }
    if (auto it = loops[k].find("derived"); it != loops[k].end()) {
      check_derived(sc.problem.loops.back(), *it, path + ".derived");
    }
  }
  if (!sc.placements.empty() && sc.placements.size() != sc.problem.loops.size()) {
    schema_error("$.loops", "placement must be given for every loop or none");
  }
  try {
    validate(sc.problem);
  } catch (const Error& e) {
    throw Error(ErrorCode::Validation, std::string("$.p_max_w: ") + e.what());
  }
  return sc;
}

inline json result_to_json(const AllocationResult& r) {
  json doc;
  doc["format"] = kResultFormat;
  doc["version"] = kFormatVersion;
  doc["method"] = to_string(r.method);
  doc["powers_w"] = r.powers_w;
  json costs = json::array();
  for (double c : r.lqr_costs) costs.push_back(io_detail::finite_or_null(c));
  doc["lqr_costs"] = std::move(costs);
  doc["total_cost"] = io_detail::finite_or_null(r.total_cost);
  doc["lambda"] = r.lambda;
  doc["iterations"] = r.iterations;
  doc["residual"] = r.residual;
  doc["warnings"] = r.warnings;
  return doc;
}

inline AllocationResult result_from_json(const json& doc) {
  using namespace io_detail;
  check_format(doc, kResultFormat);
  AllocationResult r;
  const auto& method = field(doc, "method", "$");
  const auto parsed = method.is_string() ? parse_method(method.get<std::string>()) : std::nullopt;
  if (!parsed) schema_error("$.method", "unknown method");
  r.method = *parsed;
  r.powers_w = number_array(field(doc, "powers_w", "$"), "$.powers_w", false);
  r.lqr_costs = number_array(field(doc, "lqr_costs", "$"), "$.lqr_costs", true);
  if (r.lqr_costs.size() != r.powers_w.size()) schema_error("$.lqr_costs", "length differs from powers_w");
  r.total_cost = number_or_inf(field(doc, "total_cost", "$"), "$.total_cost");
  r.lambda = number_field(doc, "lambda", "$");
  r.iterations = static_cast<int>(integer(field(doc, "iterations", "$"), "$.iterations"));
  r.residual = number_field(doc, "residual", "$");
  if (auto it = doc.find("warnings"); it != doc.end()) {
    if (!it->is_array()) schema_error("$.warnings", "expected an array of strings");
    for (const auto& w : *it) {
      if (!w.is_string()) schema_error("$.warnings", "expected an array of strings");
      r.warnings.push_back(w.get<std::string>());
    }
  }
  return r;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Schema, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

inline std::string dump(const json& doc) { return doc.dump(1) + "\n"; }

inline Scenario load_scenario(const std::string& path) { return scenario_from_json(read_json_file(path)); }

inline void save_scenario(const std::string& path, const Scenario& sc) {
  write_text_file(path, dump(scenario_to_json(sc)));
}

inline AllocationResult load_result(const std::string& path) { return result_from_json(read_json_file(path)); }

inline void save_result(const std::string& path, const AllocationResult& r) {
  write_text_file(path, dump(result_to_json(r)));
}

inline ScenarioSpec load_spec(const std::string& path) { return spec_from_json(read_json_file(path)); }

}  // namespace ctrlpower
