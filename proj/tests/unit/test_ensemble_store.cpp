#include "redcal/csv.hpp"
#include "redcal/ensemble_store.hpp"
#include "redcal/synthetic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace redcal;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

SeriesEnsemble toy_series() {
  DesignMatrix d(3, kParamDim);
  d << 0.1, 0.2, 0.3, 0.4, 0.5, 0.5, 0.5, 0.5, 0.9, 0.8, 0.7, 0.6;
  Eigen::MatrixXd v(3, 4);
  v << 500, 480, 460, 440,  //
      500, 430, 420, 410,   //
      500, 499, 498, 497.123456789012345;
  Eigen::VectorXd t(4);
  t << -15000, -12000, -10000, 0;
  return SeriesEnsemble(v, t, Design(d));
}

}  // namespace

TEST_CASE("design file with 625 rows loads as p = 625") {
  testing::TempDir dir("store");
  Design d = synthetic::factorial_design(5);
  save_design(d, dir / "design.csv");
  Design back = load_design(dir / "design.csv");
  CHECK(back.size() == 625);
  CHECK(back == d);
  auto raw = load_matrix(dir / "design.csv", MatrixKind::Design);
  CHECK(raw.rows() == 625);
  CHECK(raw.cols() == 4);
}

TEST_CASE("empty file reports no rows") {
  testing::TempDir dir("store");
  write(dir / "empty.csv", "");
  std::string msg = error_of([&] { load_matrix(dir / "empty.csv", MatrixKind::Design); });
  CHECK(msg.find("no rows") != std::string::npos);
}

TEST_CASE("series header that is not increasing names the column") {
  testing::TempDir dir("store");
  write(dir / "s.csv", "-300,-200,-250,0\n1,2,3,4\n");
  std::string msg = error_of([&] { load_matrix(dir / "s.csv", MatrixKind::Series); });
  CHECK(msg.find("column 3") != std::string::npos);
}

TEST_CASE("binary entry outside {0,1} is rejected with row and column") {
  testing::TempDir dir("store");
  Grid g(1, 2);
  save_grid_manifest(g, dir / "m.json");
  write(dir / "b.csv", "r0_c0,r0_c1\n1,0\n0,0.3\n");
  DesignMatrix d(2, kParamDim);
  d << 0.1, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2, 0.2;
  std::string msg = error_of([&] { load_binary(dir / "b.csv", dir / "m.json", Design(d)); });
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("column 2") != std::string::npos);
}

TEST_CASE("every domain type round-trips bit-exactly") {
  testing::TempDir dir("store");
  SeriesEnsemble s = toy_series();
  save_design(s.design(), dir / "design.csv");
  save_series(s, dir / "series.csv");
  CHECK(load_series(dir / "series.csv", s.design()) == s);

  Grid g(3, 4, {0, 11}, "km");
  Eigen::MatrixXd b(3, g.active());
  b.setZero();
  b(0, 1) = b(2, 5) = b(1, 9) = 1.0;
  BinaryEnsemble be(b, g, s.design());
  save_binary(be, dir / "binary.csv", dir / "manifest.json");
  CHECK(load_binary(dir / "binary.csv", dir / "manifest.json", s.design()) == be);

  std::mt19937_64 rng(3);
  Eigen::MatrixXd field = testing::random_matrix(rng, 3, g.active());
  save_field(field, g, dir / "thickness.csv");
  CHECK(load_field(dir / "thickness.csv", g) == field);

  SeriesObservation zs{s.values().row(1).transpose() * 1.0000000001};
  save_series_observation(zs, s.times(), dir / "zs.csv");
  CHECK(load_series_observation(dir / "zs.csv", s.times()).values == zs.values);
  BinaryObservation zb{b.row(2).transpose()};
  save_binary_observation(zb, g, dir / "zb.csv");
  CHECK(load_binary_observation(dir / "zb.csv", g).values == zb.values);
}

TEST_CASE("masked cells are dropped from the grid") {
  Grid g(2, 3, {4});
  CHECK(g.active() == 5);
  auto h = grid_header(g);
  CHECK(h.size() == 5);
  CHECK(h.front() == "r0_c0");
  CHECK(std::find(h.begin(), h.end(), "r1_c1") == h.end());
}

TEST_CASE("exclusion rule") {
  SeriesEnsemble s = toy_series();
  SUBCASE("run that never crosses is retained; crossing before the cutoff is dropped") {
    auto r = exclude_unrealistic_runs(s, 437.0, -10000.0);
    CHECK(r.excluded_rows == std::vector<Eigen::Index>{1});
    CHECK(r.retained_rows == std::vector<Eigen::Index>{0, 2});
    CHECK(r.retained.runs() == 2);
  }
  SUBCASE("crossing exactly at the cutoff time is retained") {
    auto r = exclude_unrealistic_runs(s, 460.0, -10000.0);
    CHECK(r.retained_rows == std::vector<Eigen::Index>{0, 2});
    auto r2 = exclude_unrealistic_runs(s, 420.0, -10000.0);
    CHECK(r2.retained_rows == std::vector<Eigen::Index>{0, 1, 2});
  }
  SUBCASE("idempotent, and the two index lists partition the rows") {
    auto r = exclude_unrealistic_runs(s, 437.0, -10000.0);
    auto again = exclude_unrealistic_runs(r.retained, 437.0, -10000.0);
    CHECK(again.retained == r.retained);
    std::vector<Eigen::Index> all = r.retained_rows;
    all.insert(all.end(), r.excluded_rows.begin(), r.excluded_rows.end());
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<Eigen::Index>{0, 1, 2});
  }
  SUBCASE("empty result is allowed with a warning") {
    auto r = exclude_unrealistic_runs(s, 10000.0, -10000.0);
    CHECK(r.retained.runs() == 0);
    CHECK_FALSE(r.warnings.empty());
  }
}

TEST_CASE("csv number format round-trips doubles") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    double x = u(rng) * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
    CHECK(csv::parse_double(csv::format(x), "test") == x);
  }
}
