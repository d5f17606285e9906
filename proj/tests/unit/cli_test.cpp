#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the installed CLI with stdout/stderr captured to files.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path base = fs::temp_directory_path() / "slelab_cli_test";
  fs::create_directories(base);
  const fs::path out = base / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = base / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string("\"") + SLELAB_CLI_PATH + "\" " + args +
                          " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_CASE("help exits cleanly") {
  const RunResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("simulate-trace") != std::string::npos);
  CHECK(r.out.find("report-bundle") != std::string::npos);
}

TEST_CASE("a subcommand is required") {
  const RunResult r = run_cli("");
  CHECK(r.exit_code == 2);
}

TEST_CASE("missing kappa is reported by key name") {
  const RunResult r = run_cli("check-martingale");
  CHECK(r.exit_code == 2);
  CHECK(r.err == "missing required key: kappa\n");
}

TEST_CASE("unknown config keys are rejected by name") {
  const fs::path base = fs::temp_directory_path() / "slelab_cli_test";
  fs::create_directories(base);
  const fs::path cfg = base / "bad.cfg";
  std::ofstream(cfg) << "bogus=1\n";
  const RunResult r =
      run_cli("check-martingale --kappa 2 --config " + cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("bogus") != std::string::npos);
}

TEST_CASE("simulate-trace writes the documented csv") {
  const fs::path base = fs::temp_directory_path() / "slelab_cli_test";
  fs::create_directories(base);
  const fs::path csv = base / "trace.csv";
  const RunResult r = run_cli(
      "simulate-trace --kappa 2.6667 --T 0.05 --dt 0.01 --seed 3 --out " +
      csv.string());
  CHECK(r.exit_code == 0);
  std::ifstream in(csv);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "t,re,im,vbound");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows >= 2);
}

TEST_CASE("same seed gives byte-identical csv output") {
  const fs::path base = fs::temp_directory_path() / "slelab_cli_test";
  fs::create_directories(base);
  const fs::path a = base / "rep_a.csv";
  const fs::path b = base / "rep_b.csv";
  const std::string args =
      "simulate-trace --kappa 4 --T 0.05 --dt 0.01 --seed 11 --out ";
  CHECK(run_cli(args + a.string()).exit_code == 0);
  CHECK(run_cli(args + b.string()).exit_code == 0);
  const std::string ca = slurp(a);
  CHECK(ca == slurp(b));
  CHECK(!ca.empty());
}

TEST_CASE("report-bundle exit codes follow verdict counts") {
  const fs::path base = fs::temp_directory_path() / "slelab_cli_bundle";
  fs::remove_all(base);
  fs::create_directories(base);
  CHECK(run_cli("report-bundle --dir " + base.string()).exit_code == 0);

  std::ofstream(base / "fail.json")
      << "{\"test\":\"x\",\"version\":\"0\",\"timestamp\":\"t\",\"pass\":false}\n";
  const RunResult r = run_cli("report-bundle --dir " + base.string());
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("fail") != std::string::npos);
  fs::remove_all(base);
}
