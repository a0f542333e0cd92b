#include "calib_fixture.hpp"
#include "redcal/calibration.hpp"

#include <doctest.h>

using namespace redcal;
using testing::Toy;

namespace {

constexpr double kLn2Pi = 1.8378770664093453;

double normal_logpdf(double x, double m, double v) { return -0.5 * (std::log(2 * M_PI * v) + (x - m) * (x - m) / v); }

double inv_gamma_logpdf(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1) * std::log(x) - b / x;
}

/// Joint covariance of (nu1, nu2) under the correlation reading.
Eigen::MatrixXd nu_joint_cov(const ChainState& s) {
  const Eigen::Index me = s.r_nu.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(me + 1, me + 1);
  c.topLeftCorner(me, me) = s.alpha1_sq * Eigen::MatrixXd::Identity(me, me);
  c(me, me) = s.alpha2_sq;
  c.topRightCorner(me, 1) = std::sqrt(s.alpha1_sq * s.alpha2_sq) * s.r_nu;
  c.bottomLeftCorner(1, me) = c.topRightCorner(me, 1).transpose();
  return c;
}

/// Log density of the unreduced series observation z - mean = K1 w + eps with
/// w ~ N(m, C) and eps ~ N(0, sigma^2 I), minus the part of it that lives in
/// the orthogonal complement of the column space of K1, plus log pdet(S).
double dense_series_oracle(const ChainState& s, const Eigen::MatrixXd& k1y, const Eigen::MatrixXd& k1d,
                           const Eigen::VectorXd& z, const Eigen::VectorXd& mu0, const Eigen::VectorXd& mu_eta,
                           const Eigen::VectorXd& var_eta) {
  const Eigen::Index n = z.size(), j1 = k1y.cols(), me = k1d.cols();
  Eigen::MatrixXd k1(n, j1 + me);
  k1 << k1y, k1d;
  Eigen::MatrixXd jc = nu_joint_cov(s);
  Eigen::MatrixXd c11 = jc.topLeftCorner(me, me), c12 = jc.topRightCorner(me, 1);
  Eigen::VectorXd m(j1 + me);
  m << mu_eta, c12 * (s.nu2 / s.alpha2_sq);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(j1 + me, j1 + me);
  c.topLeftCorner(j1, j1) = var_eta.asDiagonal();
  c.bottomRightCorner(me, me) = c11 - c12 * c12.transpose() / s.alpha2_sq;
  Eigen::MatrixXd cov = k1 * c * k1.transpose() + s.sigma_eps_sq * Eigen::MatrixXd::Identity(n, n);
  double full = testing::dense_gaussian_logpdf(z - mu0, k1 * m, cov);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k1 * k1.transpose());
  const double top = es.eigenvalues().maxCoeff();
  Eigen::Index r = 0;
  double log_pdet = 0.0;
  Eigen::MatrixXd perp(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (es.eigenvalues()[i] > 1e-10 * top) {
      ++r;
      log_pdet += 0.5 * std::log(es.eigenvalues()[i]);
    } else {
      perp.conservativeResize(n, perp.cols() + 1);
      perp.col(perp.cols() - 1) = es.eigenvectors().col(i);
    }
  }
  Eigen::VectorXd out = perp.transpose() * (z - mu0);
  double comp = -0.5 * (out.squaredNorm() / s.sigma_eps_sq +
                        static_cast<double>(n - r) * (std::log(s.sigma_eps_sq) + kLn2Pi));
  return full - comp + log_pdet;
}

}  // namespace

TEST_CASE("reduced observation") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd k1y = testing::random_matrix(rng, 12, 3), k1d = testing::random_matrix(rng, 12, 4);
  Eigen::VectorXd mean = testing::random_matrix(rng, 12, 1);
  Eigen::MatrixXd k1(12, 7);
  k1 << k1y, k1d;
  SUBCASE("observation at the mean reduces to zero") {
    auto r = reduce_observation(mean, mean, k1y, k1d);
    CHECK(r.z1r.isZero(0.0));
    CHECK(r.warnings.empty());
    CHECK(r.rank() == 7);
  }
  SUBCASE("recovers exact coefficients on the column space") {
    Eigen::VectorXd w = testing::random_matrix(rng, 7, 1);
    auto r = reduce_observation(mean + k1 * w, mean, k1y, k1d);
    CHECK((r.z1r - w).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("matches the normal equations") {
    Eigen::VectorXd z = testing::random_matrix(rng, 12, 1);
    auto r = reduce_observation(z, mean, k1y, k1d);
    Eigen::MatrixXd gram = k1.transpose() * k1;
    Eigen::VectorXd ls = gram.ldlt().solve(k1.transpose() * (z - mean));
    CHECK((r.z1r - ls).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r.projector_gram - gram.inverse()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r.projector_gram - r.projector_gram.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.projector_gram);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(r.j1 == 3);
    CHECK(r.m_eff == 4);
  }
  SUBCASE("rank deficiency is reported with the smallest singular value") {
    Eigen::MatrixXd bad = k1d;
    bad.col(2) = k1y.col(0) - 2.0 * k1d.col(1);
    auto r = reduce_observation(testing::random_matrix(rng, 12, 1), mean, k1y, bad);
    CHECK(r.rank() == 6);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("smallest singular value") != std::string::npos);
    Eigen::MatrixXd kb(12, 7);
    kb << k1y, bad;
    CHECK((r.projector_gram - kb.completeOrthogonalDecomposition().pseudoInverse() *
                                  kb.completeOrthogonalDecomposition().pseudoInverse().transpose())
              .cwiseAbs()
              .maxCoeff() < 1e-8);
  }
  SUBCASE("argument errors") {
    CHECK_THROWS_AS(reduce_observation(mean.head(5), mean, k1y, k1d), Error);
    CHECK_THROWS_AS(reduce_observation(mean, mean, Eigen::MatrixXd::Zero(12, 3), Eigen::MatrixXd::Zero(12, 4)), Error);
    Eigen::MatrixXd wide = testing::random_matrix(rng, 12, 10);
    CHECK_THROWS_AS(reduce_observation(mean, mean, k1y, wide), Error);
  }
  SUBCASE("hash depends on the basis only") {
    auto a = reduce_observation(mean, mean, k1y, k1d);
    auto b = reduce_observation(testing::random_matrix(rng, 12, 1), mean, k1y, k1d);
    auto c = reduce_observation(mean, mean, k1y, 2.0 * k1d);
    CHECK(a.joint_basis_hash == b.joint_basis_hash);
    CHECK(a.joint_basis_hash != c.joint_basis_hash);
  }
}

TEST_CASE("conditional discrepancy moments") {
  SUBCASE("independence") {
    ChainState s;
    s.alpha1_sq = 2.5;
    s.nu2 = Eigen::VectorXd::Constant(1, 1.7);
    s.r_nu = Eigen::MatrixXd::Zero(4, 1);
    auto m = conditional_nu1_moments(s);
    CHECK(m.mean.isZero(0.0));
    CHECK(m.cov.isApprox(2.5 * Eigen::MatrixXd::Identity(4, 4)));
  }
  SUBCASE("scalar bivariate normal") {
    ChainState s;
    s.alpha1_sq = 4.0;
    s.alpha2_sq = 1.0;
    s.nu2 = Eigen::VectorXd::Constant(1, 3.0);
    s.r_nu = Eigen::MatrixXd::Constant(1, 1, 0.5);
    auto m = conditional_nu1_moments(s);
    CHECK(m.mean[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(m.cov(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
  }
  SUBCASE("Schur complement of the joint Gaussian") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.4, 0.4), pos(0.2, 3.0);
    for (int rep = 0; rep < 20; ++rep) {
      ChainState s;
      s.alpha1_sq = pos(rng);
      s.alpha2_sq = pos(rng);
      s.nu2 = Eigen::VectorXd::Constant(1, 3 * u(rng));
      s.r_nu.resize(5, 1);
      for (auto& v : s.r_nu.reshaped()) v = u(rng);
      if (!s.correlations_valid()) continue;
      Eigen::MatrixXd c = nu_joint_cov(s);
      Eigen::MatrixXd c12 = c.topRightCorner(5, 1);
      Eigen::VectorXd mean = c12 * (s.nu2 / c(5, 5));
      Eigen::MatrixXd cov = c.topLeftCorner(5, 5) - c12 * c12.transpose() / c(5, 5);
      auto m = conditional_nu1_moments(s);
      CHECK((m.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((m.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("invalid correlations are rejected") {
    ChainState s;
    s.nu2 = Eigen::VectorXd::Zero(1);
    s.r_nu = Eigen::MatrixXd::Constant(2, 1, 0.8);
    CHECK_FALSE(s.correlations_valid());
    CHECK_THROWS_AS(conditional_nu1_moments(s), Error);
    s.r_nu = Eigen::MatrixXd::Constant(2, 1, 1.0);
    CHECK_FALSE(s.correlations_valid());
    s.r_nu = Eigen::MatrixXd::Constant(2, 1, 0.7);
    CHECK(s.correlations_valid());
    s.alpha1_sq = -1;
    CHECK_THROWS_AS(s.validate(), Error);
  }
}

TEST_CASE("series likelihood") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd k1y = testing::random_matrix(rng, 15, 2), k1d = testing::random_matrix(rng, 15, 3);
  Eigen::VectorXd z = testing::random_matrix(rng, 15, 1), mu0 = testing::random_matrix(rng, 15, 1);
  Eigen::VectorXd mu_eta(2), var_eta(2);
  mu_eta << 0.3, -0.8;
  var_eta << 0.4, 1.1;
  ChainState s;
  s.alpha1_sq = 1.4;
  s.alpha2_sq = 0.6;
  s.sigma_eps_sq = 0.3;
  s.nu2 = Eigen::VectorXd::Constant(1, -0.7);
  s.r_nu = Eigen::MatrixXd::Constant(3, 1, 0.3);

  SUBCASE("matches the reduced density built from dense matrices") {
    auto r = reduce_observation(z, mu0, k1y, k1d);
    Eigen::MatrixXd k1(15, 5);
    k1 << k1y, k1d;
    Eigen::MatrixXd gi = (k1.transpose() * k1).inverse();
    Eigen::VectorXd zr = gi * k1.transpose() * (z - mu0);
    Eigen::MatrixXd jc = nu_joint_cov(s);
    Eigen::VectorXd m(5);
    m << mu_eta, jc.topRightCorner(3, 1) * (s.nu2 / s.alpha2_sq);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(5, 5);
    c.topLeftCorner(2, 2) = var_eta.asDiagonal();
    c.bottomRightCorner(3, 3) =
        jc.topLeftCorner(3, 3) - jc.topRightCorner(3, 1) * jc.topRightCorner(3, 1).transpose() / s.alpha2_sq;
    c += s.sigma_eps_sq * gi;
    CHECK(std::abs(series_log_likelihood(s, r, mu_eta, var_eta) - testing::dense_gaussian_logpdf(zr, m, c)) < 1e-9);
  }
  SUBCASE("agrees with the unreduced Gaussian on the column space") {
    auto r = reduce_observation(z, mu0, k1y, k1d);
    double oracle = dense_series_oracle(s, k1y, k1d, z, mu0, mu_eta, var_eta);
    CHECK(std::abs(series_log_likelihood(s, r, mu_eta, var_eta) - oracle) < 1e-8);
  }
  SUBCASE("rank-deficient basis drops only invisible directions") {
    Eigen::MatrixXd bad = k1d;
    bad.col(1) = 0.5 * k1y.col(1) + k1d.col(0);
    auto r = reduce_observation(z, mu0, k1y, bad);
    REQUIRE(r.rank() == 4);
    double oracle = dense_series_oracle(s, k1y, bad, z, mu0, mu_eta, var_eta);
    CHECK(std::abs(series_log_likelihood(s, r, mu_eta, var_eta) - oracle) < 1e-7);
  }
  SUBCASE("huge observation noise makes the data uninformative") {
    auto r = reduce_observation(z, mu0, k1y, k1d);
    s.sigma_eps_sq = 1e12;
    Eigen::VectorXd other(2);
    other << 5.0, -3.0;
    double a = series_log_likelihood(s, r, mu_eta, var_eta);
    double b = series_log_likelihood(s, r, other, 3.0 * var_eta);
    CHECK(std::abs(a - b) < 1e-6);
  }
  SUBCASE("common rescaling of data, bases and noise leaves the density fixed") {
    auto r = reduce_observation(z, mu0, k1y, k1d);
    auto r3 = reduce_observation(3.0 * z, 3.0 * mu0, 3.0 * k1y, 3.0 * k1d);
    ChainState s3 = s;
    s3.sigma_eps_sq *= 9.0;
    CHECK(series_log_likelihood(s, r, mu_eta, var_eta) ==
          doctest::Approx(series_log_likelihood(s3, r3, mu_eta, var_eta)).epsilon(1e-10));
  }
  SUBCASE("bank path uses the state's sills") {
    Toy toy;
    ChainState st = toy.state();
    auto pred = bank_predict(toy.series_bank, st.theta, &st.kappa1);
    CHECK(series_log_likelihood(st, toy.robs, toy.series_bank) ==
          series_log_likelihood(st, toy.robs, pred.mean, pred.variance));
    EmulatorBank one = toy.series_bank;
    one.components.pop_back();
    CHECK_THROWS_AS(series_log_likelihood(st, toy.robs, one), Error);
  }
  SUBCASE("dimension errors") {
    auto r = reduce_observation(z, mu0, k1y, k1d);
    CHECK_THROWS_AS(series_log_likelihood(s, r, mu_eta.head(1), var_eta.head(1)), Error);
    s.r_nu = Eigen::MatrixXd::Zero(2, 1);
    CHECK_THROWS_AS(series_log_likelihood(s, r, mu_eta, var_eta), Error);
  }
}

TEST_CASE("binary likelihood") {
  CHECK(binary_log_likelihood(Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6)) ==
        doctest::Approx(6 * std::log(0.5)).epsilon(1e-14));
  Eigen::VectorXd l(1), z(1);
  l << std::log(7.0);
  z << 1.0;
  CHECK(binary_log_likelihood(l, z) == doctest::Approx(std::log(7.0 / 8.0)).epsilon(1e-14));
  CHECK(binary_log_likelihood(l, z) == doctest::Approx(-0.1335).epsilon(1e-3));
  l << 800.0;
  CHECK(binary_log_likelihood(l, z) == 0.0);
  z << 0.0;
  CHECK(binary_log_likelihood(l, z) == doctest::Approx(-800.0));
  l << -800.0;
  CHECK(binary_log_likelihood(l, z) == 0.0);
  CHECK_THROWS_AS(binary_log_likelihood(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), Error);

  Toy toy;
  ChainState s = toy.state();
  Eigen::VectorXd lambda = toy.lpca.offset + toy.lpca.basis * s.psi + toy.bdisc.column * s.nu2[0];
  CHECK((binary_logits(s, toy.lpca, toy.bdisc) - lambda).cwiseAbs().maxCoeff() < 1e-14);
  double direct = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    double p = 1.0 / (1.0 + std::exp(-lambda[j]));
    direct += toy.z2.values[j] > 0.5 ? std::log(p) : std::log(1 - p);
  }
  CHECK(binary_log_likelihood(s, toy.z2, toy.lpca, toy.bdisc) == doctest::Approx(direct).epsilon(1e-12));
  s.psi.resize(3);
  CHECK_THROWS_AS(binary_logits(s, toy.lpca, toy.bdisc), Error);
}

TEST_CASE("priors") {
  CHECK(inverse_gamma_log_density(1.5, 2.0, 3.0) == doctest::Approx(inv_gamma_logpdf(1.5, 2.0, 3.0)).epsilon(1e-14));
  CHECK(inverse_gamma_log_density(0.0, 2.0, 3.0) == -std::numeric_limits<double>::infinity());
  Eigen::VectorXd mle(3);
  mle << 0.5, 2.0, 7.0;
  Design d(Eigen::MatrixXd::Random(5, 4).array().abs());
  PriorConfig p = PriorConfig::from_fit(mle, d);
  for (Eigen::Index j = 0; j < 3; ++j) {
    // The inverse-gamma mode is scale / (shape + 1).
    CHECK(p.kappa_scale[j] / (p.kappa_shape + 1) == doctest::Approx(mle[j]).epsilon(1e-14));
    double at = inverse_gamma_log_density(mle[j], 50.0, p.kappa_scale[j]);
    CHECK(at > inverse_gamma_log_density(mle[j] * 1.01, 50.0, p.kappa_scale[j]));
    CHECK(at > inverse_gamma_log_density(mle[j] * 0.99, 50.0, p.kappa_scale[j]));
  }
  CHECK(p.theta_lower == d.lower());
  CHECK(p.theta_upper == d.upper());
  mle[1] = -1.0;
  CHECK_THROWS_AS(PriorConfig::from_fit(mle, d), Error);
  CHECK(parse_mode("joint") == Mode::Joint);
  CHECK(parse_mode("binary_only") == Mode::BinaryOnly);
  CHECK_THROWS_AS(parse_mode("series"), Error);
  CHECK(mode_name(Mode::BinaryOnly) == "binary_only");
}

TEST_CASE("log posterior") {
  Toy toy;
  toy.bundle.prior.theta_lower = Theta::Zero();
  toy.bundle.prior.theta_upper = Theta::Ones();
  ChainState s = toy.state();
  const PriorConfig& pr = toy.bundle.prior;

  SUBCASE("θ outside the cube has zero density") {
    ChainState t = s;
    t.theta[2] = 1.2;
    CHECK(log_posterior(t, toy.bundle, Mode::Joint) == -std::numeric_limits<double>::infinity());
    t.theta[2] = -0.01;
    CHECK(log_posterior(t, toy.bundle, Mode::BinaryOnly) == -std::numeric_limits<double>::infinity());
  }
  SUBCASE("joint mode equals the sum of independently computed factors") {
    auto psi_pred = bank_predict(toy.binary_bank, s.theta);
    double psi = 0.0;
    for (Eigen::Index j = 0; j < s.psi.size(); ++j) psi += normal_logpdf(s.psi[j], psi_pred.mean[j], psi_pred.variance[j]);
    double nu2 = normal_logpdf(s.nu2[0], 0.0, s.alpha2_sq);
    double binary = binary_log_likelihood(s, toy.z2, toy.lpca, toy.bdisc);
    double bpri = inv_gamma_logpdf(s.alpha2_sq, 2, 3);
    double spri = inv_gamma_logpdf(s.alpha1_sq, 2, 3) + inv_gamma_logpdf(s.sigma_eps_sq, 2, 3);
    for (Eigen::Index j = 0; j < s.kappa1.size(); ++j) spri += inv_gamma_logpdf(s.kappa1[j], 50, pr.kappa_scale[j]);
    double series = series_log_likelihood(s, toy.robs, toy.series_bank);
    double joint = log_posterior(s, toy.bundle, Mode::Joint);
    double bonly = log_posterior(s, toy.bundle, Mode::BinaryOnly);
    CHECK(std::abs(joint - (psi + nu2 + binary + bpri + spri + series)) < 1e-10);
    CHECK(std::abs(bonly - (psi + nu2 + binary + bpri)) < 1e-10);
    auto t = log_posterior_terms(s, toy.bundle, Mode::Joint);
    CHECK(std::abs(t.total - bonly - t.series - t.series_priors) < 1e-10);
  }
  SUBCASE("independent channels add when the cross-correlation vanishes") {
    ChainState t = s;
    t.r_nu.setZero();
    t.nu2.setZero();
    auto terms = log_posterior_terms(t, toy.bundle, Mode::Joint);
    Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(1);
    ChainState bare = t;
    bare.nu2 = zero2;
    double standalone = series_log_likelihood(bare, toy.robs, toy.series_bank);
    CHECK(std::abs(terms.total - log_posterior(t, toy.bundle, Mode::BinaryOnly) - terms.series_priors - standalone) < 1e-10);
    ChainState far = t;
    far.nu2[0] = 5.0;
    CHECK(std::abs(series_log_likelihood(far, toy.robs, toy.series_bank) - standalone) < 1e-12);
  }
  SUBCASE("invariant under a consistent pixel permutation") {
    const Eigen::Index m = toy.z2.values.size();
    Eigen::VectorXi perm(m);
    for (Eigen::Index j = 0; j < m; ++j) perm[j] = static_cast<int>((7 * j + 3) % m);
    Eigen::PermutationMatrix<Eigen::Dynamic> p(perm);
    double before = log_posterior(s, toy.bundle, Mode::Joint);
    toy.z2.values = p * toy.z2.values;
    toy.lpca.basis = p * toy.lpca.basis;
    toy.lpca.offset = p * toy.lpca.offset;
    toy.bdisc.column = p * toy.bdisc.column;
    CHECK(log_posterior(s, toy.bundle, Mode::Joint) == doctest::Approx(before).epsilon(1e-12));
  }
  SUBCASE("invalid series parameters have zero density in joint mode only") {
    ChainState t = s;
    t.r_nu.setConstant(0.9);
    CHECK(log_posterior(t, toy.bundle, Mode::Joint) == -std::numeric_limits<double>::infinity());
    t = s;
    t.sigma_eps_sq = 0.0;
    CHECK(log_posterior(t, toy.bundle, Mode::Joint) == -std::numeric_limits<double>::infinity());
    CHECK(std::isfinite(log_posterior(t, toy.bundle, Mode::BinaryOnly)));
  }
  SUBCASE("bundle validation") {
    DataBundle b = toy.bundle;
    b.robs = nullptr;
    CHECK_THROWS_AS(b.validate(Mode::Joint), Error);
    CHECK_NOTHROW(b.validate(Mode::BinaryOnly));
    b.binary_bank = nullptr;
    CHECK_THROWS_AS(b.validate(Mode::BinaryOnly), Error);
  }
  SUBCASE("initial state is valid and finite") {
    for (Mode mode : {Mode::Joint, Mode::BinaryOnly}) {
      ChainState init = initial_state(toy.bundle, mode);
      CHECK_NOTHROW(init.validate());
      CHECK(std::isfinite(log_posterior(init, toy.bundle, mode)));
      CHECK(init.alpha2_sq == doctest::Approx(1.0));
      CHECK(init.nu2.isZero(0.0));
    }
    ChainState j = initial_state(toy.bundle, Mode::Joint);
    CHECK(j.kappa1 == toy.series_bank.fitted_kappas());
    CHECK(j.r_nu.isZero(0.0));
    CHECK(initial_state(toy.bundle, Mode::BinaryOnly).kappa1.size() == 0);
  }
}
