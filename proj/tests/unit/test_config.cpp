#include "redcal/config.hpp"
#include "redcal/csv.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace redcal;

TEST_CASE("defaults") {
  RunConfig c;
  CHECK(c.j1 == 20);
  CHECK(c.j2 == 10);
  CHECK(c.knots == 1500);
  CHECK(c.kernel_range == 750.0);
  CHECK(c.m_eff == 300);
  CHECK(c.mismatch_threshold == 0.5);
  CHECK(c.iterations == 70000);
  CHECK(c.kappa_shape == 50.0);
  CHECK(c.variance_shape == 2.0);
  CHECK(c.variance_scale == 3.0);
  CHECK(c.simulate.grid_rows == 86);
  CHECK(c.simulate.grid_cols == 37);
  CHECK(c.simulate.keep_fraction == 0.9);
  CHECK(c.simulate.discrepancy_sill == 90.0);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("text round trip") {
  RunConfig c;
  c.set("reduce.j1", "7");
  c.set("simulate.truth", "0.1, 0.2, 0.3, 0.4");
  c.set("kernel_range", "812.5");
  c.set("calibrate.mode", "binary_only");
  c.set("project.mean_only", "true");
  c.set("sea_level_scale", "0.1");
  RunConfig back = RunConfig::from_text(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.j1 == 7);
  CHECK(back.simulate.truth == Theta(0.1, 0.2, 0.3, 0.4));
  CHECK(back.kernel_range == 812.5);
  CHECK(back.mode == "binary_only");
  CHECK(back.mean_only);
  CHECK(back.sea_level_scale == 0.1);
  for (const auto& k : c.keys()) CHECK(back.get(k) == c.get(k));
  CHECK(c.to_text().find("[reduce]\n") != std::string::npos);
}

TEST_CASE("persisted file with comments and quotes") {
  testing::TempDir dir("cfg");
  csv::write_text(dir.path() / "c.ini",
                  "# a comment\n[simulate]\ngrid_rows = 42   # trailing\ngrid_cols=19\n\n[calibrate]\nmode = \"joint\"\n"
                  "iterations = 20000\n");
  RunConfig c = RunConfig::load(dir.path() / "c.ini");
  CHECK(c.simulate.grid_rows == 42);
  CHECK(c.simulate.grid_cols == 19);
  CHECK(c.iterations == 20000);
  CHECK_THROWS_AS(RunConfig::load(dir.path() / "missing.ini"), Error);
}

TEST_CASE("errors name the key") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(c.set("reduce.j9", "1"), doctest::Contains("unknown config key 'reduce.j9'"), Error);
  CHECK_THROWS_WITH_AS(c.set("reduce.j1", "abc"), doctest::Contains("reduce.j1"), Error);
  CHECK_THROWS_WITH_AS(c.set("simulate.truth", "0.1,0.2"), doctest::Contains("4 comma-separated"), Error);
  CHECK_THROWS_WITH_AS(c.set("mean_only", "maybe"), doctest::Contains("true or false"), Error);
  CHECK_THROWS_WITH_AS(RunConfig::from_text("[reduce\nj1=3\n", "x.ini"), doctest::Contains("x.ini:1"), Error);
  CHECK_THROWS_WITH_AS(RunConfig::from_text("[reduce]\nj1\n", "x.ini"), doctest::Contains("x.ini:2"), Error);

  auto invalid = [](const std::string& key, const std::string& value) {
    RunConfig r;
    r.set(key, value);
    try {
      r.validate();
    } catch (const Error& e) {
      return std::string(e.what()).find(key) != std::string::npos;
    }
    return false;
  };
  CHECK(invalid("reduce.j1", "0"));
  CHECK(invalid("reduce.m_eff", "1600"));
  CHECK(invalid("reduce.mismatch_threshold", "1"));
  CHECK(invalid("calibrate.mode", "series"));
  CHECK(invalid("calibrate.burn_in_fraction", "1"));
  CHECK(invalid("simulate.keep_fraction", "0"));
  CHECK(invalid("simulate.truth", "0.5,0.5,0.5,1.5"));
  CHECK(invalid("calibrate.step_theta", "-1"));
  CHECK(invalid("run.threads", "0"));
  CHECK(invalid("reduce.knots", "5000"));
}
