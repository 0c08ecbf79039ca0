#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctrlpower/commands.hpp"
#include "support.hpp"

using namespace ctrlpower;

namespace {

namespace fs = std::filesystem;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ctrlpower");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string dir() {
  const auto d = fs::temp_directory_path() / "ctrlpower_cli_test";
  fs::create_directories(d);
  return d.string();
}

std::string write(const std::string& name, const std::string& text) {
  const std::string path = dir() + "/" + name;
  write_text_file(path, text);
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) rows.push_back(split_csv_line(line));
  return rows;
}

/// Scenario written by `gen` from the given spec text.
std::string generated(const std::string& name, const std::string& spec_json, const std::string& pmax = "5") {
  const auto spec = write(name + ".spec.json", spec_json);
  const auto out = dir() + "/" + name + ".json";
  const auto r = run({"gen", spec, out, "--pmax-dbw", pmax});
  REQUIRE(r.code == 0);
  return out;
}

}  // namespace

TEST_CASE("gen", "[cli]") {
  const auto path = generated("default", "{}");
  const auto sc = load_scenario(path);
  REQUIRE(sc.problem.size() == 5);
  for (const auto& loop : sc.problem.loops) {
    CHECK(loop.channel().bandwidth_hz == 5000.0);
    CHECK(loop.plant().cycle_s == 0.01);
    CHECK(loop.plant().state_dim() == 100);
    CHECK(loop.plant().Q.isIdentity());
    CHECK(loop.plant().R.isZero());
    CHECK(loop.plant().Sigma.isApprox(0.01 * Eigen::MatrixXd::Identity(100, 100)));
  }
  CHECK(sc.spec.has_value());
  CHECK(sc.spec->seed == 1);

  const auto again = generated("default_again", "{}");
  CHECK(slurp(path) == slurp(again));

  const auto bad = write("k0.spec.json", R"({"num_robots": 0})");
  const auto r = run({"gen", bad, dir() + "/k0.json"});
  CHECK(r.code == 2);
  CHECK(r.err.find("num_robots") != std::string::npos);

  CHECK(run({"gen", dir() + "/missing.spec.json", dir() + "/x.json"}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("solve", "[cli]") {
  const auto path = generated("solve", R"({"state_dim": 4})");

  const auto exact_out = dir() + "/solve.exact.json";
  const auto wf_out = dir() + "/solve.wf.json";
  const auto exact = run({"solve", path, "--method", "exact", "--pmax-dbw", "5", "--out", exact_out});
  const auto wf = run({"solve", path, "--method", "wf", "--pmax-dbw", "5", "--out", wf_out});
  REQUIRE(exact.code == 0);
  REQUIRE(wf.code == 0);
  CHECK(exact.out.find("total_lqr_cost") != std::string::npos);
  const auto re = load_result(exact_out);
  const auto rw = load_result(wf_out);
  CHECK(re.method == Method::exact);
  CHECK(re.total_cost < rw.total_cost);
  CHECK(std::abs(re.power_sum() - dbw_to_watts(5.0)) <= 1e-9 * dbw_to_watts(5.0));

  // Default result path next to the scenario.
  CHECK(run({"solve", path, "--method", "closed"}).code == 0);
  CHECK(fs::exists(dir() + "/solve.result.json"));

  CHECK(run({"solve", path, "--method", "nope"}).code == 2);
}

TEST_CASE("solve edge cases", "[cli]") {
  SECTION("single loop") {
    const auto path = generated("k1", R"({"num_robots": 1, "state_dim": 3})");
    const auto out = dir() + "/k1.result.json";
    REQUIRE(run({"solve", path, "--method", "exact", "--pmax-dbw", "3", "--out", out}).code == 0);
    CHECK(load_result(out).powers_w[0] == dbw_to_watts(3.0));
  }

  SECTION("closed form with unequal cycle times") {
    Scenario sc = load_scenario(generated("uneq", R"({"state_dim": 2})"));
    json doc = scenario_to_json(sc);
    doc["loops"][3]["plant"]["cycle_s"] = 0.02;
    doc["loops"][3].erase("derived");
    const auto path = write("uneq_t.json", dump(doc));
    const auto r = run({"solve", path, "--method", "closed"});
    CHECK(r.code == 2);
    CHECK(r.err.find("UnequalCycleTimes") != std::string::npos);
    CHECK(run({"solve", path, "--method", "exact"}).code == 0);
  }

  SECTION("infeasible budget") {
    const auto path = generated("infeasible", R"({"h_range_bits": [90, 100], "state_dim": 2})");
    const auto r = run({"solve", path, "--method", "exact", "--pmax-dbw", "-20"});
    CHECK(r.code == 3);
    CHECK(r.err.find("deficit_w") != std::string::npos);
  }
}

TEST_CASE("sweep", "[cli]") {
  const auto path = generated("sweep", "{}");
  const auto out = dir() + "/sweep.csv";
  const auto r = run({"sweep", path, "--pmax-range=-10:20:1", "--methods", "exact,closed,wf", "--out", out});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(slurp(out));
  REQUIRE(rows.size() == 1 + 31 * 3);
  CHECK(rows[0] == std::vector<std::string>{"p_max_dbw", "method", "total_lqr_cost", "p_1", "p_2", "p_3",
                                            "p_4", "p_5", "floor"});

  std::map<std::string, std::vector<double>> cost;
  std::map<std::string, double> last;
  bool saw_infeasible = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    REQUIRE(row.size() == 9);
    CHECK(row[8] == rows[1][8]);  // floor column constant
    if (row[2] == "infeasible") {
      saw_infeasible = true;
      CHECK(row[1] == "exact");
      continue;
    }
    const double c = std::stod(row[2]);
    cost[row[1]].push_back(c);
  }
  CHECK(saw_infeasible);
  for (const auto& [method, v] : cost) {
    INFO(method);
    for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] <= v[i - 1]);
  }
  // Gap between exact and water filling closes at the high end.
  const double gap_mid = cost["wf"][cost["wf"].size() - 16] - cost["exact"][cost["exact"].size() - 16];
  const double gap_top = cost["wf"].back() - cost["exact"].back();
  CHECK(gap_top >= 0.0);
  CHECK(gap_top < gap_mid);

  // Standard output when no file is given.
  const auto stdout_run = run({"sweep", path, "--pmax-range=0:2:1", "--methods", "wf"});
  CHECK(stdout_run.code == 0);
  CHECK(parse_csv(stdout_run.out).size() == 4);

  CHECK(run({"sweep", path, "--pmax-range=5:1:1"}).code == 2);
  CHECK(run({"sweep", path, "--pmax-range=a:b"}).code == 2);
  CHECK(run({"sweep", path, "--methods", "exact,foo"}).code == 2);
}

TEST_CASE("compare", "[cli]") {
  const auto path = generated("cmp", R"({"h_range_bits": [5, 5]})");
  const auto r = run({"compare", path, "--pmax-dbw", "5"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"channel", "loop", "gain", "h_bits", "p_min_w", "exact",
                                            "closed_form", "water_filling"});
  double sums[3] = {0, 0, 0};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (i > 1) CHECK(std::stod(rows[i][2]) <= std::stod(rows[i - 1][2]));
    for (int m = 0; m < 3; ++m) sums[m] += std::stod(rows[i][5 + m]);
  }
  for (double s : sums) CHECK(std::abs(s - dbw_to_watts(5.0)) <= 1e-8);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][5]) >= std::stod(rows[i - 1][5]));  // exact grows as gain falls
    CHECK(std::stod(rows[i][7]) <= std::stod(rows[i - 1][7]));  // water filling shrinks
  }

  const auto infeasible = generated("cmp_inf", R"({"h_range_bits": [90, 100], "state_dim": 2})");
  const auto ri = run({"compare", infeasible, "--pmax-dbw", "-20"});
  CHECK(ri.code == 0);
  CHECK(ri.out.find("infeasible") != std::string::npos);
}

TEST_CASE("validate", "[cli]") {
  const auto path = generated("val", R"({"num_robots": 2})");
  const auto r = run({"validate", path, "--horizon", "5000", "--seeds", "1,2"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][6] == "ok");
    CHECK(std::stod(rows[i][4]) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(std::stod(rows[i][5]) <= 0.02);
  }

  // Noiseless plant: empirical cost is exactly zero.
  json doc = read_json_file(path);
  for (auto& loop : doc["loops"]) {
    for (auto& row : loop["plant"]["Sigma"])
      for (auto& v : row) v = 0.0;
    loop.erase("derived");
  }
  const auto quiet = write("val_quiet.json", dump(doc));
  const auto rq = run({"validate", quiet, "--horizon", "100"});
  REQUIRE(rq.code == 0);
  const auto qrows = parse_csv(rq.out);
  CHECK(qrows[1][3] == "0");

  CHECK(run({"validate", path, "--seeds", "x"}).code == 2);
}
