#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "doctest.h"
#include "flowguard/io.hpp"

using namespace flowguard;
namespace fs = std::filesystem;

namespace {

const std::string kCli = FLOWGUARD_CLI_PATH;

int run_cli(const std::string& args) {
  const std::string cmd = "'" + kCli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<double> read_values(const fs::path& p) {
  std::ifstream in(p);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  return v;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("flowguard_test_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("process-flow on a text matrix") {
  const auto d = scratch("csv");
  write_text(d / "m.csv", "1,3\n5,7\n");
  REQUIRE(run_cli("process-flow '" + (d / "m.csv").string() + "' --grid 2x2 --k 1 --cth 0.5 --out '" +
                  (d / "t.txt").string() + "'") == 0);
  const auto v = read_values(d / "t.txt");
  const std::vector<double> expected{0.064766, 0.094068, 0.094068, 0.064766};
  REQUIRE(v.size() == 4);
  for (std::size_t n = 0; n < 4; ++n) CHECK(std::abs(v[n] - expected[n]) < 1e-5);
  fs::remove_all(d);
}

TEST_CASE("process-flow on a constant .flo") {
  const auto d = scratch("const");
  io::FlowField f{8, 6, std::vector<float>(2 * 8 * 6, 1.5f)};
  io::write_flo_file(d / "c.flo", f);
  REQUIRE(run_cli("process-flow '" + (d / "c.flo").string() + "' --grid 3x3 --k 2 --out '" +
                  (d / "t.txt").string() + "'") == 0);
  const auto v = read_values(d / "t.txt");
  REQUIRE(v.size() == 18);
  // Zero deviation squashes to 0.5, so every threshold is c_th / (1 + e).
  for (double x : v) CHECK(x == doctest::Approx(0.5 / (1.0 + std::exp(1.0))).epsilon(1e-12));
  fs::remove_all(d);
}

TEST_CASE("process-flow rejects bad input without leaving output") {
  const auto d = scratch("bad");
  io::FlowField f{4, 4, std::vector<float>(32, 1.0f)};
  io::write_flo_file(d / "ok.flo", f);
  const std::string bytes = slurp(d / "ok.flo");
  std::ofstream(d / "cut.flo", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  CHECK(run_cli("process-flow '" + (d / "cut.flo").string() + "' --out '" + (d / "t.txt").string() + "'") == 2);
  CHECK_FALSE(fs::exists(d / "t.txt"));
  CHECK(run_cli("process-flow '" + (d / "missing.flo").string() + "' --out '" + (d / "t.txt").string() + "'") == 2);
  CHECK(run_cli("process-flow '" + (d / "ok.flo").string() + "' --grid 0x3 --out '" + (d / "t.txt").string() +
                "'") == 2);
  CHECK(run_cli("process-flow '" + (d / "ok.flo").string() + "' --cth 2 --out '" + (d / "t.txt").string() +
                "'") == 2);
  CHECK_FALSE(fs::exists(d / "t.txt"));
  CHECK(run_cli("no-such-command") == 2);
  fs::remove_all(d);
}

TEST_CASE("simulate writes one row per step") {
  const auto d = scratch("sim");
  write_text(d / "c.yaml", "policy: always_t\nscenario:\n  horizon: 10\n");
  REQUIRE(run_cli("simulate --config '" + (d / "c.yaml").string() + "' --seed 7 --out '" + (d / "o").string() +
                  "'") == 0);
  CHECK(count_lines(d / "o" / "timeseries.csv") == 11);
  CHECK(count_lines(d / "o" / "summary.csv") == 2);

  write_text(d / "bad.yaml", "policy: always_t\nscenario:\n  horizonn: 10\n");
  CHECK(run_cli("simulate --config '" + (d / "bad.yaml").string() + "' --out '" + (d / "p").string() + "'") == 2);
  CHECK_FALSE(fs::exists(d / "p" / "timeseries.csv"));
  fs::remove_all(d);
}

TEST_CASE("compare is deterministic and covers all policies") {
  const auto d = scratch("cmp");
  write_text(d / "c.yaml",
             "format: tsv\nscenario:\n  horizon: 100\nreinforce:\n  train_episodes: 2\n  train_horizon: 20\n");
  const std::string base = "compare --config '" + (d / "c.yaml").string() + "' --seed 3 --out '";
  REQUIRE(run_cli(base + (d / "a").string() + "'") == 0);
  REQUIRE(run_cli(base + (d / "b").string() + "'") == 0);
  CHECK(count_lines(d / "a" / "summary.tsv") == 5);
  CHECK(count_lines(d / "a" / "timeseries.tsv") == 401);
  for (const auto& e : fs::directory_iterator(d / "a")) {
    const auto other = d / "b" / e.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(e.path()) == slurp(other));
  }
  fs::remove_all(d);
}
