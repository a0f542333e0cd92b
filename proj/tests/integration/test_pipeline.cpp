#include "redcal/config.hpp"
#include "redcal/csv.hpp"
#include "redcal/redcal.h"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Config {
  redcal_config* ptr = nullptr;
  Config() {
    REQUIRE(redcal_config_create(&ptr) == REDCAL_OK);
    REQUIRE(redcal_config_load(ptr, REDCAL_TINY_CONFIG) == REDCAL_OK);
  }
  ~Config() { redcal_config_destroy(ptr); }
};

redcal_status run(const Config& c, const char* command, const fs::path& dir) {
  return redcal_run_command(c.ptr, command, dir.c_str());
}

std::string slurp(const fs::path& p) { return redcal::csv::read_text(p); }

/// Runs the CLI with stdout and stderr captured into files under `dir`.
int cli(const std::string& args, const fs::path& dir, std::string* out = nullptr, std::string* err = nullptr) {
  std::string cmd = std::string(REDCAL_CLI) + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                    (dir / "stderr.txt").string();
  int rc = std::system(cmd.c_str());
  if (out) *out = slurp(dir / "stdout.txt");
  if (err) *err = slurp(dir / "stderr.txt");
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kCommands[] = {"simulate", "reduce", "fit-emulator", "loo-check", "calibrate", "project", "summarize"};

}  // namespace

TEST_CASE("full pipeline through the C interface") {
  testing::TempDir dir("pipe");
  Config c;
  for (const char* cmd : kCommands) {
    INFO(cmd << ": " << redcal_last_error());
    REQUIRE(run(c, cmd, dir.path()) == REDCAL_OK);
  }
  REQUIRE(redcal_config_set(c.ptr, "calibrate.mode", "binary_only") == REDCAL_OK);
  REQUIRE(run(c, "calibrate", dir.path()) == REDCAL_OK);
  REQUIRE(run(c, "project", dir.path()) == REDCAL_OK);
  REQUIRE(run(c, "summarize", dir.path()) == REDCAL_OK);

  for (const char* f : {"design.csv", "series.csv", "binary.csv", "thickness.csv", "volume.csv", "trajectory.csv",
                        "obs_series.csv", "obs_binary.csv", "truth.json", "retained_runs.csv", "loo_report.csv",
                        "report.md", "emulator/projection.json", "calibrate_joint/chain.csv",
                        "calibrate_joint/diagnostics.json", "calibrate_joint/posterior_summary.csv",
                        "calibrate_joint/projection_summary.csv", "calibrate_joint/envelope.csv",
                        "calibrate_binary_only/chain.csv", "calibrate_binary_only/envelope.csv"})
    CHECK_MESSAGE(fs::exists(dir.path() / f), f);

  std::vector<std::string> header;
  auto chain = redcal::csv::read_matrix(dir.path() / "calibrate_joint" / "chain.csv", &header);
  CHECK(chain.rows() == 2 * 1500);
  CHECK(header.front() == "chain");
  CHECK(header.back() == "log_post");
  auto design = redcal::csv::read_matrix(dir.path() / "design.csv", &header);
  CHECK(design.rows() == 81);
  std::string report = slurp(dir.path() / "report.md");
  for (const char* section : {"Leave-out", "Posterior (joint)", "Posterior (binary_only)", "MCSE", "half-chain KS"})
    CHECK_MESSAGE(report.find(section) != std::string::npos, section);

  SUBCASE("commands are idempotent") {
    std::string before = slurp(dir.path() / "calibrate_binary_only" / "chain.csv");
    std::string env_before = slurp(dir.path() / "calibrate_binary_only" / "envelope.csv");
    REQUIRE(run(c, "calibrate", dir.path()) == REDCAL_OK);
    REQUIRE(run(c, "project", dir.path()) == REDCAL_OK);
    CHECK(slurp(dir.path() / "calibrate_binary_only" / "chain.csv") == before);
    CHECK(slurp(dir.path() / "calibrate_binary_only" / "envelope.csv") == env_before);
  }
  SUBCASE("emulator fit does not depend on the thread count") {
    std::string bank = slurp(dir.path() / "emulator" / "gp_series_0.json");
    REQUIRE(redcal_config_set(c.ptr, "run.threads", "3") == REDCAL_OK);
    REQUIRE(run(c, "fit-emulator", dir.path()) == REDCAL_OK);
    CHECK(slurp(dir.path() / "emulator" / "gp_series_0.json") == bank);
  }
}

TEST_CASE("missing upstream artifacts name their producer") {
  testing::TempDir dir("missing");
  Config c;
  CHECK(run(c, "reduce", dir.path()) == REDCAL_E_MISSING_ARTIFACT);
  CHECK(std::string(redcal_last_error()).find("run simulate") != std::string::npos);
  REQUIRE(run(c, "simulate", dir.path()) == REDCAL_OK);
  CHECK(run(c, "fit-emulator", dir.path()) == REDCAL_E_MISSING_ARTIFACT);
  CHECK(std::string(redcal_last_error()).find("run reduce") != std::string::npos);
  REQUIRE(run(c, "reduce", dir.path()) == REDCAL_OK);
  CHECK(run(c, "calibrate", dir.path()) == REDCAL_E_MISSING_ARTIFACT);
  CHECK(std::string(redcal_last_error()) == "emulator bank missing; run fit-emulator");
  CHECK(run(c, "project", dir.path()) == REDCAL_E_MISSING_ARTIFACT);
  REQUIRE(run(c, "summarize", dir.path()) == REDCAL_OK);
  CHECK(fs::exists(dir.path() / "report.md"));
}

TEST_CASE("invalid config is rejected before any work") {
  testing::TempDir dir("invalid");
  Config c;
  REQUIRE(redcal_config_set(c.ptr, "reduce.m_eff", "0") == REDCAL_OK);
  CHECK(run(c, "simulate", dir.path()) == REDCAL_E_INVALID_ARGUMENT);
  CHECK(std::string(redcal_last_error()).find("reduce.m_eff") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "design.csv"));
}

TEST_CASE("command-line driver") {
  testing::TempDir dir("cli");
  std::string out, err;
  SUBCASE("defaults print as a loadable config") {
    REQUIRE(cli("--print-defaults", dir.path(), &out) == 0);
    redcal::RunConfig parsed = redcal::RunConfig::from_text(out);
    CHECK(parsed.to_text() == redcal::RunConfig().to_text());
    CHECK(out.find("m_eff = 300") != std::string::npos);
  }
  SUBCASE("simulate then calibrate produces a chain") {
    const std::string base = std::string("--config ") + REDCAL_TINY_CONFIG + " --out " + (dir.path() / "run").string();
    for (const char* cmd : {"simulate", "reduce", "fit-emulator"}) REQUIRE(cli(std::string(cmd) + " " + base, dir.path()) == 0);
    REQUIRE(cli("calibrate " + base + " --mode joint --iters 300 --chains 1 --seed 5", dir.path(), nullptr, &err) == 0);
    CHECK(fs::exists(dir.path() / "run" / "calibrate_joint" / "chain.csv"));
    auto chain = redcal::csv::read_matrix(dir.path() / "run" / "calibrate_joint" / "chain.csv", nullptr);
    CHECK(chain.rows() == 300);
    CHECK(err.find("joint chain") != std::string::npos);
  }
  SUBCASE("errors map to exit codes") {
    const std::string run = " --out " + (dir.path() / "empty").string();
    CHECK(cli("calibrate" + run, dir.path(), nullptr, &err) == REDCAL_E_MISSING_ARTIFACT);
    CHECK(err.find("run simulate") != std::string::npos);
    CHECK(cli("simulate --set reduce.j5=3" + run, dir.path(), nullptr, &err) == REDCAL_E_INVALID_ARGUMENT);
    CHECK(err.find("reduce.j5") != std::string::npos);
    CHECK(cli("simulate --set reduce.j1" + run, dir.path()) == REDCAL_E_INVALID_ARGUMENT);
    CHECK(cli("calibrate --mode series" + run, dir.path()) != 0);
    CHECK(cli("dance" + run, dir.path()) != 0);
    CHECK(cli("simulate --config /nonexistent.ini" + run, dir.path()) != 0);
    CHECK(cli("simulate --threads 0" + run, dir.path(), nullptr, &err) == REDCAL_E_INVALID_ARGUMENT);
    CHECK(err.find("run.threads") != std::string::npos);
  }
  SUBCASE("thread count falls back to the environment") {
    const std::string run = " --out " + (dir.path() / "env").string();
    CHECK(cli("simulate --config " + std::string(REDCAL_TINY_CONFIG) + run, dir.path()) == 0);
    std::string cmd = std::string("REDCAL_THREADS=0 ") + REDCAL_CLI + " reduce" + run + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(rc) == REDCAL_E_INVALID_ARGUMENT);
  }
}
