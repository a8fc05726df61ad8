#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "../support/schema_check.hpp"
#include "dive/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string err;
};

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("dive_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run dive_cli(const std::string& args) {
  const auto err = workdir() / "stderr.txt";
  const std::string cmd = std::string("cd '") + workdir().string() + "' && '" + DIVE_CLI_PATH + "' " + args +
                          " >/dev/null 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(err)};
}

std::vector<std::string> validate(const std::string& schema, const fs::path& doc) {
  schema_check::Validator v(json::parse(slurp(fs::path(DIVE_SCHEMA_DIR) / schema)));
  return v.validate(json::parse(slurp(doc)));
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

json cdf(std::vector<double> theta) {
  return json{{"link", "standard-normal"}, {"L", -5.0}, {"U", 5.0}, {"theta", theta}};
}

}  // namespace

TEST_CASE("simulate") {
  REQUIRE(dive_cli("simulate --scenario S1 --n 5 --seed 1 --out s5.csv").code == 0);
  const auto text = slurp(workdir() / "s5.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
  CHECK(text.rfind("z,d,y\n", 0) == 0);
  REQUIRE(dive_cli("simulate --scenario S1 --n 5 --seed 1 --out s5b.csv").code == 0);
  CHECK(slurp(workdir() / "s5b.csv") == text);
  CHECK(dive_cli("simulate --scenario S7 --n 5 --out x.csv").code == 2);
  CHECK(dive_cli("simulate --n 5 --out x.csv").code == 2);
  CHECK(dive_cli("simulate --scenario S1 --n 5 --out /nonexistent/dir/x.csv").code != 0);
}

TEST_CASE("fit usage and data errors") {
  write(workdir() / "one_arm.csv", "z,d,y\n0.1,1,2\n0.3,1,2.5\n0.2,1,1\n0.5,1,3\n0.9,1,2.2\n");
  const auto r = dive_cli("fit --in one_arm.csv --out f.json");
  CHECK(r.code == 2);
  CHECK(r.err.find("both treatment arms required") != std::string::npos);
  REQUIRE(dive_cli("simulate --scenario S1 --n 200 --seed 3 --out s200.csv").code == 0);
  CHECK(dive_cli("fit --in s200.csv --out f.json --alpha 1.5").code == 2);
  CHECK(dive_cli("fit --in s200.csv --out f.json --link cauchy").code == 2);
  write(workdir() / "bad.csv", "z,d,y\n0.1,0,2\n0.3,1,oops\n");
  const auto bad = dive_cli("fit --in bad.csv --out f.json");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("row 3") != std::string::npos);
  CHECK(bad.err.find("column 3") != std::string::npos);
  CHECK(dive_cli("fit --in missing.csv --out f.json").code == 1);
  CHECK(dive_cli("--help").code == 0);
  CHECK(dive_cli("").code == 2);
}

TEST_CASE("non-convergence writes the fit and exits 3") {
  REQUIRE(dive_cli("simulate --scenario S1 --n 200 --seed 3 --out s200.csv").code == 0);
  fs::remove(workdir() / "nc.json");
  const auto r = dive_cli("fit --in s200.csv --out nc.json --alpha 0.9999 --max-restarts 2 --order 8");
  CHECK(r.code == 3);
  CHECK(r.err.find("DIVE did not converge") != std::string::npos);
  REQUIRE(fs::exists(workdir() / "nc.json"));
  CHECK(validate("dive_fit.schema.json", workdir() / "nc.json").empty());
  CHECK(json::parse(slurp(workdir() / "nc.json"))["converged"] == false);
}

TEST_CASE("discrete instrument detection is logged") {
  std::ostringstream csv;
  csv << "z,d,y\n";
  for (int i = 0; i < 60; ++i) csv << (i % 3) << ',' << (i % 2) << ',' << (0.1 * i + (i % 3)) << '\n';
  write(workdir() / "disc.csv", csv.str());
  const auto r = dive_cli("fit --in disc.csv --out disc.json --order 6 --max-restarts 1");
  CHECK((r.code == 0 || r.code == 3));
  CHECK(r.err.find("discrete") != std::string::npos);
  CHECK(json::parse(slurp(workdir() / "disc.json"))["config"]["z_type"] == "discrete");
  const auto forced = dive_cli("fit --in disc.csv --out disc2.json --order 6 --max-restarts 1 --z-type continuous");
  CHECK(forced.err.find("info:") == std::string::npos);
}

TEST_CASE("effects on hand-built fits") {
  json same{{"F0", cdf({-2, -1, 0, 1, 2})}, {"F1", cdf({-2, -1, 0, 1, 2})}, {"converged", true}};
  write(workdir() / "same.json", same.dump());
  REQUIRE(dive_cli("effects --fit same.json --kind ace --out ace.json").code == 0);
  const auto ace = json::parse(slurp(workdir() / "ace.json"));
  CHECK(ace["value"].get<double>() == 0.0);
  CHECK(validate("ace.schema.json", workdir() / "ace.json").empty());

  REQUIRE(dive_cli("effects --fit same.json --kind dte --out dte.json").code == 0);
  CHECK(validate("effect_curve.schema.json", workdir() / "dte.json").empty());
  for (const auto& v : json::parse(slurp(workdir() / "dte.json"))["values"]) CHECK(std::abs(v.get<double>()) <= 1.0);

  json narrow{{"F0", cdf({-1, -0.5, 0, 0.5, 1})}, {"F1", cdf({-2, -1, 0, 1, 2})}, {"converged", true}};
  write(workdir() / "narrow.json", narrow.dump());
  const auto r = dive_cli("effects --fit narrow.json --kind qte --out q.csv");
  CHECK(r.code == 4);
  CHECK(r.err.find("range") != std::string::npos);
  CHECK(dive_cli("effects --fit narrow.json --kind qte --tau-min 0.3 --tau-max 0.7 --out q.csv").code == 0);
  REQUIRE(dive_cli("effects --fit narrow.json --kind dok --out dok.csv").code == 0);
  CHECK(slurp(workdir() / "dok.csv").find(",NA\n") != std::string::npos);

  json flat{{"F0", cdf({0, 0, 0, 0, 0})}, {"F1", cdf({-2, -1, 0, 1, 2})}, {"converged", true}};
  write(workdir() / "flat.json", flat.dump());
  const auto d = dive_cli("effects --fit flat.json --kind qte --tau-min 0.4 --tau-max 0.6 --out q.csv");
  CHECK(d.code == 4);
  CHECK(dive_cli("effects --fit flat.json --kind median --out q.csv").code == 2);
  write(workdir() / "garbage.json", "{\"F0\": 3}");
  CHECK(dive_cli("effects --fit garbage.json --kind dte --out q.csv").code == 2);
}

TEST_CASE("benchmark table") {
  REQUIRE(dive_cli("benchmark --scenarios S1,S4 --n 60,120 --replicates 2 --seed 5 --order 8 --max-epochs 80 "
                   "--out b1.json")
              .code == 0);
  REQUIRE(dive_cli("benchmark --scenarios S1,S4 --n 60,120 --replicates 2 --seed 5 --order 8 --max-epochs 80 "
                   "--out b2.json")
              .code == 0);
  CHECK(validate("benchmark.schema.json", workdir() / "b1.json").empty());
  auto a = json::parse(slurp(workdir() / "b1.json"))["rows"];
  auto b = json::parse(slurp(workdir() / "b2.json"))["rows"];
  REQUIRE(a.size() == 16);
  int dive_rows = 0, ccdf_rows = 0;
  for (auto& row : a) {
    dive_rows += row["method"] == "DIVE";
    ccdf_rows += row["method"] == "CCDF";
    row.erase("wall_time_s");
  }
  for (auto& row : b) row.erase("wall_time_s");
  CHECK(dive_rows == ccdf_rows);
  CHECK(a == b);
  CHECK_FALSE(fs::exists(workdir() / "b1.json.partial.jsonl"));
  CHECK(dive_cli("benchmark --scenarios S1 --n ten --out b.json").code == 2);
}

TEST_CASE("landscape grid") {
  REQUIRE(dive_cli("landscape --mu-grid 0,1,3,4 --lambdas 0.01,1 --n 2000 --seed 2 --out land.csv").code == 0);
  std::istringstream in(slurp(workdir() / "land.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "lambda,mu0,mu1,loss");
  std::map<std::tuple<double, double, double>, double> loss;
  int rows = 0;
  while (std::getline(in, line)) {
    double l, m0, m1, v;
    char c;
    std::istringstream ls(line);
    ls >> l >> c >> m0 >> c >> m1 >> c >> v;
    loss[{l, m0, m1}] = v;
    ++rows;
  }
  CHECK(rows == 2 * 4 * 4);
  for (double l : {0.01, 1.0}) CHECK(loss[{l, 0.0, 1.0}] <= loss[{l, 3.0, 4.0}]);
  bool differ = false;
  for (double m0 : {0.0, 1.0, 3.0, 4.0})
    for (double m1 : {0.0, 1.0, 3.0, 4.0}) differ = differ || loss[{0.01, m0, m1}] != loss[{1.0, m0, m1}];
  CHECK(differ);
  CHECK(dive_cli("landscape --lambdas 0,1 --out land.csv").code == 2);
}
