// End-to-end checks of the hbci binary. The path comes from the HBCI_CLI
// environment variable (set by ctest); cases are skipped when it is absent.
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

const char* cli_path() { return std::getenv("HBCI_CLI"); }

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + cli_path() + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) {
    result.output.append(buf.data(), n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) out.push_back(item);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("table1 rows match the published rates within 0.01 bit/min") {
  if (!cli_path()) return;  // not running under ctest
  const RunResult r = run_cli("table1");
  REQUIRE(r.exit_code == 0);
  const auto lines = split(r.output, '\n');
  REQUIRE(lines.size() >= 6);
  const std::array<double, 5> published = {17.14, 7.92, 1.56, 2.49, 5.94};
  for (int i = 0; i < 5; ++i) {
    const auto cols = split(lines[static_cast<std::size_t>(i) + 1], ',');
    REQUIRE(cols.size() == 6);
    CHECK(std::abs(std::stod(cols[5]) - published[static_cast<std::size_t>(i)]) <
          0.01);
  }
}

TEST_CASE("wire-selftest reports zero undetected corruptions and exits 0") {
  if (!cli_path()) return;
  const RunResult r = run_cli("wire-selftest");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("0 undetected") != std::string::npos);
}

TEST_CASE("unknown subcommands and flags are usage errors with exit 2") {
  if (!cli_path()) return;
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("spell --no-such-flag").exit_code == 2);
}

TEST_CASE("calibrate round-trips a model and spell consumes it") {
  if (!cli_path()) return;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hbci_cli_case";
  fs::create_directories(dir);
  const fs::path model = dir / "model.json";
  const fs::path epochs = dir / "epochs.jsonl";
  const fs::path report = dir / "report.json";

  const RunResult cal = run_cli("calibrate --seed 5 --selections 4 --out " +
                                model.string() + " --dump-epochs " +
                                epochs.string());
  CHECK(cal.exit_code == 0);
  CHECK(fs::exists(model));
  CHECK(fs::exists(epochs));

  const RunResult spell = run_cli("spell --seed 5 --model " + model.string() +
                                  " --targets 1,2 --out " + report.string());
  CHECK(spell.exit_code == 0);
  CHECK(fs::exists(report));
  CHECK(fs::exists(dir / "report.csv"));

  // offline retraining from the exported epochs gives a loadable model
  const fs::path model2 = dir / "model2.json";
  const RunResult offline = run_cli("calibrate --from-epochs " +
                                    epochs.string() + " --out " +
                                    model2.string());
  CHECK(offline.exit_code == 0);
  CHECK(fs::exists(model2));

  fs::remove_all(dir);
}

TEST_CASE("simulate emits one CSV row per sweep cell") {
  if (!cli_path()) return;
  const RunResult r =
      run_cli("simulate --amps 0,5 --n-avgs 5 --n-targets 4 --selections 2 "
              "--seed 3");
  REQUIRE(r.exit_code == 0);
  const auto lines = split(r.output, '\n');
  REQUIRE(!lines.empty());
  CHECK(lines[0] ==
        "p300_amp,n_avg,accuracy,bits_per_selection,bprr_bits_per_min");
  int rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (!lines[i].empty()) ++rows;
  }
  CHECK(rows == 2);
}

}  // TEST_SUITE
