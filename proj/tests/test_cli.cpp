#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli_app.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

#ifndef ESDELAY_PROBLEMS_DIR
#define ESDELAY_PROBLEMS_DIR "problems"
#endif

namespace {

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"esdelay"};
  argv.insert(argv.end(), args.begin(), args.end());
  return esdelay::cli::run(int(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string problems(const char* name) {
  return std::string(ESDELAY_PROBLEMS_DIR) + "/" + name;
}

struct temp_dir {
  fs::path path;
  explicit temp_dir(const char* tag) : path(fs::temp_directory_path() / tag) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~temp_dir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("analyze writes a byte-stable report and exits cleanly") {
  temp_dir dir("esdelay_cli_analyze");
  const std::string problem = problems("ex3_2.json");
  const std::string out = dir.path.string();
  CHECK(run_cli({"analyze", "--problem", problem.c_str(), "--out", out.c_str()}) == 0);
  REQUIRE(fs::exists(dir.path / "report.json"));
  const std::string first = slurp(dir.path / "report.json");
  CHECK(run_cli({"analyze", "--problem", problem.c_str(), "--out", out.c_str()}) == 0);
  CHECK(slurp(dir.path / "report.json") == first);
  CHECK(first.find("\"eps_star\"") != std::string::npos);
  CHECK(fs::exists(dir.path / "run_meta.json"));
}

TEST_CASE("analyze on an infeasible gain exits 1 and names the channel") {
  temp_dir dir("esdelay_cli_bad");
  const std::string problem = problems("bad_gain.json");
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  const int rc =
      run_cli({"analyze", "--problem", problem.c_str(), "--out", dir.path.string().c_str()});
  std::cerr.rdbuf(old);
  CHECK(rc == 1);
  CHECK(captured.str().find("channel 1") != std::string::npos);
  CHECK(captured.str().find("GainInfeasible") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  std::ostringstream sink;
  auto* old = std::cerr.rdbuf(sink.rdbuf());
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"analyze"}) == 2);                    // missing --problem
  CHECK(run_cli({"reproduce"}) == 2);                  // needs table or example
  CHECK(run_cli({"reproduce", "--table", "9"}) == 2);  // unknown table
  std::cerr.rdbuf(old);
}

TEST_CASE("overrides are applied before validation") {
  temp_dir dir("esdelay_cli_set");
  const std::string problem = problems("ex3_2.json");
  CHECK(run_cli({"analyze", "--problem", problem.c_str(), "--out",
                 dir.path.string().c_str(), "--set", "tuning.epsilon=0.125"}) == 0);
  const std::string report = slurp(dir.path / "report.json");
  CHECK(report.find("\"epsilon\": 0.125") != std::string::npos);
  // the resolved problem is echoed so the run is reproducible from its output
  const std::string echoed = slurp(dir.path / "problem.resolved.json");
  CHECK(echoed.find("0.125") != std::string::npos);
}

TEST_CASE("simulate verifies the sampled scalar example end to end") {
  temp_dir dir("esdelay_cli_sim");
  const std::string problem = problems("ex4_1.json");
  CHECK(run_cli({"simulate", "--problem", problem.c_str(), "--out",
                 dir.path.string().c_str()}) == 0);
  REQUIRE(fs::exists(dir.path / "trace.csv"));
  const std::string head = slurp(dir.path / "trace.csv").substr(0, 64);
  CHECK(head.find("t,theta_hat_1,theta_tilde_1,y,D_1") == 0);
  CHECK(slurp(dir.path / "verify.md").find("confirmed") != std::string::npos);
}

TEST_CASE("reproduce --table 2 passes and writes the diff artifacts") {
  temp_dir dir("esdelay_cli_rep");
  CHECK(run_cli({"reproduce", "--table", "2", "--out", dir.path.string().c_str()}) == 0);
  CHECK(fs::exists(dir.path / "table2.md"));
  CHECK(fs::exists(dir.path / "table2.csv"));
}

TEST_CASE("sweep writes one row per grid point") {
  temp_dir dir("esdelay_cli_sweep");
  const std::string problem = problems("ex3_2.json");
  CHECK(run_cli({"sweep", "--problem", problem.c_str(), "--sweep",
                 "tuning.kappa:0:0.08:3", "--out", dir.path.string().c_str()}) == 0);
  const std::string csv = slurp(dir.path / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
  CHECK(csv.find("param,value,eps_star") == 0);
}

}  // TEST_SUITE
