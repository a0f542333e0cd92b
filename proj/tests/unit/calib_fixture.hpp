#pragma once

#include "redcal/calibration.hpp"
#include "support.hpp"

namespace testing {

/// Small joint-calibration problem with fixed-hyperparameter GPs.
struct Toy {
  redcal::Design design;
  redcal::EmulatorBank series_bank, binary_bank;
  redcal::LogisticPcaModel lpca;
  redcal::BinaryDiscrepancyBasis bdisc;
  redcal::BinaryObservation z2;
  Eigen::MatrixXd k1y, k1d;
  Eigen::VectorXd z1, mean1;
  redcal::ReducedObservation robs;
  redcal::DataBundle bundle;

  Toy(std::uint64_t seed = 9, Eigen::Index n = 15, Eigen::Index j1 = 2, Eigen::Index me = 3, Eigen::Index m = 25,
      Eigen::Index j2 = 2) {
    using namespace redcal;
    std::mt19937_64 rng(seed);
    DesignMatrix pts = random_design(rng, 16);
    design = Design(pts);
    auto bank = [&](Eigen::Index count, const std::string& channel) {
      EmulatorBank b;
      b.channel = channel;
      for (Eigen::Index j = 0; j < count; ++j) {
        GpHyperParams h;
        h.kappa = 1.0 + 0.5 * static_cast<double>(j);
        h.phi = {0.6, 0.9, 1.2, 0.7};
        h.zeta = 1e-3;
        b.components.emplace_back(h, pts, random_matrix(rng, 16, 1));
      }
      return b;
    };
    series_bank = bank(j1, "series");
    binary_bank = bank(j2, "binary");
    lpca.offset = random_matrix(rng, m, 1);
    lpca.basis = random_matrix(rng, m, j2);
    bdisc.column = random_matrix(rng, m, 1);
    bdisc.threshold = 0.5;
    std::bernoulli_distribution coin(0.5);
    z2.values.resize(m);
    for (auto& v : z2.values) v = coin(rng) ? 1.0 : 0.0;
    k1y = random_matrix(rng, n, j1);
    k1d = random_matrix(rng, n, me);
    mean1 = random_matrix(rng, n, 1);
    z1 = random_matrix(rng, n, 1);
    robs = reduce_observation(z1, mean1, k1y, k1d);
    rebind();
  }

  void rebind() {
    bundle.robs = &robs;
    bundle.series_bank = &series_bank;
    bundle.z2 = &z2;
    bundle.lpca = &lpca;
    bundle.bdisc = &bdisc;
    bundle.binary_bank = &binary_bank;
    bundle.prior = redcal::PriorConfig::from_fit(series_bank.fitted_kappas(), design);
  }

  Toy(const Toy&) = delete;
  Toy& operator=(const Toy&) = delete;

  redcal::ChainState state(double rho = 0.3) const {
    redcal::ChainState s;
    s.theta << 0.3, 0.6, 0.45, 0.7;
    s.psi = redcal::bank_predict(binary_bank, s.theta).mean.array() + 0.1;
    s.kappa1 = series_bank.fitted_kappas() * 1.2;
    s.nu2 = Eigen::VectorXd::Constant(1, 0.4);
    s.alpha1_sq = 1.3;
    s.alpha2_sq = 0.8;
    s.sigma_eps_sq = 0.5;
    s.r_nu = Eigen::MatrixXd::Constant(robs.m_eff, 1, rho / std::sqrt(static_cast<double>(robs.m_eff)));
    return s;
  }
};

}  // namespace testing
