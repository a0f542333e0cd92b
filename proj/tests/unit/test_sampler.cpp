#include "calib_fixture.hpp"
#include "redcal/calibration.hpp"
#include "redcal/stats.hpp"

#include <doctest.h>

using namespace redcal;
using testing::Toy;

namespace {

ProposalScales frozen() {
  ProposalScales p;
  p.theta = p.psi = p.kappa = p.nu2 = p.alpha2 = p.alpha1 = p.sigma = p.r = 0.0;
  return p;
}

std::vector<double> column(const PosteriorChain& c, const std::string& name) {
  Eigen::VectorXd v = c.samples.col(c.column(name));
  return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST_CASE("conjugate discrepancy block") {
  Toy toy;
  toy.bdisc.column.setZero();
  ChainState s = toy.state(0.85);
  McmcOptions o;
  o.iterations = 40000;
  o.seed = 77;
  o.scales = frozen();
  o.scales.nu2 = 1.0;
  PosteriorChain chain = run_mcmc(s, toy.bundle, Mode::Joint, o);

  // z1r ~ N(m0 + b nu2, C), nu2 ~ N(0, alpha2^2).
  auto pred = bank_predict(toy.series_bank, s.theta, &s.kappa1);
  const Eigen::Index j1 = toy.robs.j1, me = toy.robs.m_eff;
  Eigen::MatrixXd k1(toy.k1y.rows(), j1 + me);
  k1 << toy.k1y, toy.k1d;
  Eigen::MatrixXd gi = (k1.transpose() * k1).inverse();
  Eigen::VectorXd zr = gi * k1.transpose() * (toy.z1 - toy.mean1);
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(j1 + me), b = Eigen::VectorXd::Zero(j1 + me);
  m0.head(j1) = pred.mean;
  b.tail(me) = std::sqrt(s.alpha1_sq / s.alpha2_sq) * s.r_nu.col(0);
  Eigen::MatrixXd c = s.sigma_eps_sq * gi;
  c.topLeftCorner(j1, j1) += pred.variance.asDiagonal();
  c.bottomRightCorner(me, me) +=
      s.alpha1_sq * (Eigen::MatrixXd::Identity(me, me) - s.r_nu * s.r_nu.transpose());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
  const double precision = 1.0 / s.alpha2_sq + b.dot(ldlt.solve(b));
  const double mean = b.dot(ldlt.solve(zr - m0)) / precision;

  auto nu = column(chain, "nu2_1");
  double mcse = stats::batch_means_mcse(nu);
  CHECK(std::abs(stats::mean(nu) - mean) < 3 * mcse);
  CHECK(stats::sd(nu) == doctest::Approx(1.0 / std::sqrt(precision)).epsilon(0.05));
  CHECK(chain.acceptance.at("nu2_alpha2") > 0.15);
  CHECK(chain.acceptance.at("nu2_alpha2") < 0.6);
  auto th = column(chain, "theta2");
  CHECK(std::all_of(th.begin(), th.end(), [&](double v) { return v == s.theta[1]; }));
}

TEST_CASE("sampler mechanics") {
  Toy toy;
  ChainState s = toy.state();
  McmcOptions o;
  o.iterations = 600;
  o.seed = 5;

  SUBCASE("zero proposal scales keep the chain constant") {
    o.scales = frozen();
    auto chain = run_mcmc(s, toy.bundle, Mode::Joint, o);
    CHECK(chain.size() == 600);
    for (Eigen::Index c = 0; c < chain.samples.cols(); ++c)
      CHECK(chain.samples.col(c).isConstant(chain.samples(0, c)));
    REQUIRE(chain.acceptance.size() == kBlockCount);
    for (const auto& [name, rate] : chain.acceptance) CHECK(rate == 1.0);
    CHECK(chain.warnings.empty());
  }
  SUBCASE("acceptance decisions follow the Metropolis rule exactly") {
    o.adapt = false;
    o.log_proposals = true;
    auto chain = run_mcmc(s, toy.bundle, Mode::Joint, o);
    REQUIRE(chain.proposals.size() > 1000);
    long mismatches = 0;
    for (const auto& p : chain.proposals) {
      CHECK(p.log_u <= 0.0);
      if ((p.log_u <= std::min(0.0, p.proposed - p.current)) != p.accepted) ++mismatches;
    }
    CHECK(mismatches == 0);
    for (std::size_t i = 1; i < chain.proposals.size(); ++i) {
      const auto& a = chain.proposals[i - 1];
      CHECK(chain.proposals[i].current == (a.accepted ? a.proposed : a.current));
    }
    for (const auto& [name, rate] : chain.acceptance) {
      CHECK(rate >= 0.0);
      CHECK(rate <= 1.0);
    }
  }
  SUBCASE("stored log target matches the exposed target") {
    auto chain = run_mcmc(s, toy.bundle, Mode::Joint, o);
    for (Eigen::Index i = 0; i < chain.size(); i += 97)
      CHECK(chain.log_post[i] == doctest::Approx(sampler_log_target(chain.state(i), toy.bundle, Mode::Joint)).epsilon(1e-9));
  }
  SUBCASE("reproducible under a fixed seed") {
    auto a = run_mcmc(s, toy.bundle, Mode::BinaryOnly, o);
    auto b = run_mcmc(s, toy.bundle, Mode::BinaryOnly, o);
    CHECK(a.samples == b.samples);
    o.seed = 6;
    auto c = run_mcmc(s, toy.bundle, Mode::BinaryOnly, o);
    CHECK(a.samples != c.samples);
    CHECK(a.names.size() == static_cast<std::size_t>(a.samples.cols()));
    CHECK(a.acceptance.count("theta") == 1);
    CHECK(a.acceptance.count("kappa1") == 0);
  }
  SUBCASE("thinning") {
    o.thin = 7;
    auto chain = run_mcmc(s, toy.bundle, Mode::Joint, o);
    CHECK(chain.size() == 600 / 7);
  }
  SUBCASE("state round trip through the flat layout") {
    auto chain = run_mcmc(s, toy.bundle, Mode::Joint, o);
    ChainState back = chain.state(0);
    CHECK(flatten(back) == chain.samples.row(0).transpose());
    CHECK(chain.column("sigma_eps_sq") == static_cast<Eigen::Index>(chain.names.size()) - 4);
    CHECK_THROWS_AS(chain.column("zeta"), Error);
  }
  SUBCASE("bad inputs") {
    ChainState bad = s;
    bad.theta[0] = 2.0;
    CHECK_THROWS_AS(run_mcmc(bad, toy.bundle, Mode::Joint, o), Error);
    o.iterations = 0;
    CHECK_THROWS_AS(run_mcmc(s, toy.bundle, Mode::Joint, o), Error);
    o.iterations = 10;
    o.burn_in_fraction = 1.0;
    CHECK_THROWS_AS(run_mcmc(s, toy.bundle, Mode::Joint, o), Error);
  }
}

TEST_CASE("batch means standard error") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> iid(10000);
  for (auto& v : iid) v = normal(rng);
  double iid_se = stats::batch_means_mcse(iid, 100);
  CHECK(iid_se == doctest::Approx(0.01).epsilon(0.3));
  std::vector<double> flat(500, 3.25);
  CHECK(stats::batch_means_mcse(flat, 10) == 0.0);
  std::vector<double> ar(10000);
  ar[0] = 0.0;
  for (std::size_t i = 1; i < ar.size(); ++i) ar[i] = 0.9 * ar[i - 1] + std::sqrt(1 - 0.81) * normal(rng);
  CHECK(stats::batch_means_mcse(ar, 100) > 2.0 * iid_se);
  CHECK_THROWS_AS(stats::batch_means_mcse(std::vector<double>(15, 1.0), 10), Error);
}

TEST_CASE("half-chain stability") {
  auto chain_of = [](const std::vector<double>& v) {
    PosteriorChain c;
    c.names = {"x"};
    c.samples = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return c;
  };
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  SUBCASE("constant chain") {
    auto r = half_chain_stability(chain_of(std::vector<double>(200, 1.0)));
    CHECK(r[0].ks == 0.0);
    CHECK(r[0].pass);
  }
  SUBCASE("stationary chain") {
    std::vector<double> v(10000);
    for (auto& x : v) x = normal(rng);
    std::span<const double> all(v);
    CHECK(stats::ks_distance(all.first(5000), all.last(5000)) < 0.05);
    CHECK(half_chain_stability(chain_of(v))[0].pass);
  }
  SUBCASE("drifting chain") {
    std::vector<double> v(10000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = normal(rng) + (i >= 5000 ? 2.0 : 0.0);
    std::span<const double> all(v);
    CHECK(stats::ks_distance(all.first(5000), all.last(5000)) > 0.5);
    auto r = half_chain_stability(chain_of(v));
    // First half against the whole chain sees half the two-sample gap.
    CHECK(r[0].ks == doctest::Approx(0.5 * std::erf(1.0 / std::sqrt(2.0))).epsilon(0.1));
    CHECK_FALSE(r[0].pass);
    auto d = diagnose(chain_of(v));
    CHECK(d.warnings.size() == 1);
    CHECK(d.mcse.size() == 1);
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(half_chain_stability(chain_of(std::vector<double>(50, 0.0))), Error);
  }
}
