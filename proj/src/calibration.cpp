#include "redcal/calibration.hpp"

#include "redcal/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace redcal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void hash_bytes(std::uint64_t& h, const double* data, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, data + i, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
}

double normal_log_density(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (d * d / var + std::log(var) + linalg::kLog2Pi);
}

}  // namespace

// ---- reduced observation ----------------------------------------------------

ReducedObservation reduce_observation(const SeriesObservation& z, const PcaModel& pca,
                                      const SeriesDiscrepancyBasis& disc) {
  return reduce_observation(z.values, pca.mean, pca.basis, disc.basis);
}

ReducedObservation reduce_observation(const Eigen::VectorXd& z, const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& k1y, const Eigen::MatrixXd& k1d) {
  const Eigen::Index n = z.size();
  if (mean.size() != n || k1y.rows() != n || k1d.rows() != n)
    fail(ErrorKind::InvalidArgument, "observation, mean and bases must share the time dimension");
  Eigen::MatrixXd k1(n, k1y.cols() + k1d.cols());
  k1 << k1y, k1d;
  if (k1.cols() > n) fail(ErrorKind::InvalidArgument, "joint basis has more columns than time points");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(k1, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (!(s[0] > 0.0)) fail(ErrorKind::Numeric, "joint basis (K1y K1d) is zero");
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > kJointBasisRankTol * s[0]) ++rank;
  ReducedObservation r;
  if (rank < k1.cols()) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "joint basis (K1y K1d) is rank deficient: smallest singular value %.3g against largest %.6g; "
                  "likelihood restricted to its %ld-dimensional column space",
                  s[s.size() - 1], s[0], static_cast<long>(rank));
    r.warnings.emplace_back(buf);
  }
  const Eigen::MatrixXd v = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd inv_s = s.head(rank).cwiseInverse();
  r.rotation = v;
  r.noise_scale = inv_s.cwiseAbs2();
  r.rotated = inv_s.asDiagonal() * (svd.matrixU().leftCols(rank).transpose() * (z - mean));
  r.z1r = v * r.rotated;
  r.projector_gram = v * r.noise_scale.asDiagonal() * v.transpose();
  const Eigen::MatrixXd v2 = v.bottomRows(k1d.cols());
  r.nu_gram = v2.transpose() * v2;
  r.j1 = k1y.cols();
  r.m_eff = k1d.cols();
  std::uint64_t h = 1469598103934665603ULL;
  hash_bytes(h, k1.data(), k1.size());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  r.joint_basis_hash = buf;
  return r;
}

// ---- state ------------------------------------------------------------------

bool ChainState::correlations_valid() const {
  if (r_nu.size() == 0) return true;
  if (!(r_nu.array().abs() < 1.0).all()) return false;
  // I - R R' is positive definite iff the largest singular value of R is below 1.
  Eigen::MatrixXd small = r_nu.transpose() * r_nu;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(small, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff() < 1.0;
}

void ChainState::validate() const {
  if (!(alpha1_sq > 0.0) || !(alpha2_sq > 0.0) || !(sigma_eps_sq > 0.0))
    fail(ErrorKind::InvalidArgument, "variance parameters must be positive");
  if (kappa1.size() && !(kappa1.array() > 0.0).all()) fail(ErrorKind::InvalidArgument, "sills must be positive");
  if (r_nu.size() && r_nu.cols() != nu2.size())
    fail(ErrorKind::InvalidArgument, "cross-correlation columns must match the binary discrepancy dimension");
  if (!correlations_valid())
    fail(ErrorKind::InvalidArgument, "cross-correlations must lie in (-1,1) with I - R R' positive definite");
}

NuMoments conditional_nu1_moments(const ChainState& s) {
  s.validate();
  NuMoments m;
  const Eigen::Index k = s.r_nu.rows();
  m.mean = std::sqrt(s.alpha1_sq / s.alpha2_sq) * (s.r_nu * s.nu2);
  m.cov = -s.alpha1_sq * (s.r_nu * s.r_nu.transpose());
  m.cov.diagonal().array() += s.alpha1_sq;
  if (k == 0) m.mean.resize(0);
  return m;
}

// ---- likelihoods --------------------------------------------------------------

double series_log_likelihood(const ChainState& s, const ReducedObservation& robs, const EmulatorBank& bank) {
  if (bank.size() != robs.j1) fail(ErrorKind::InvalidArgument, "series bank size does not match J1");
  auto pred = bank_predict(bank, s.theta, &s.kappa1);
  return series_log_likelihood(s, robs, pred.mean, pred.variance);
}

double series_log_likelihood(const ChainState& s, const ReducedObservation& robs, const Eigen::VectorXd& mu_eta,
                             const Eigen::VectorXd& var_eta) {
  const Eigen::Index j1 = robs.j1, me = robs.m_eff;
  if (mu_eta.size() != j1 || var_eta.size() != j1) fail(ErrorKind::InvalidArgument, "emulator moments must have length J1");
  if (s.r_nu.rows() != me) fail(ErrorKind::InvalidArgument, "cross-correlation rows must equal M_eff");
  NuMoments nu = conditional_nu1_moments(s);
  const auto v1 = robs.rotation.topRows(j1);
  const auto v2 = robs.rotation.bottomRows(me);
  Eigen::VectorXd mean = v1.transpose() * mu_eta + v2.transpose() * nu.mean;
  // V2' alpha1^2 (I - R R') V2 without forming the M_eff x M_eff product.
  Eigen::MatrixXd v2r = v2.transpose() * s.r_nu;
  Eigen::MatrixXd cov = s.alpha1_sq * (robs.nu_gram - v2r * v2r.transpose());
  cov.noalias() += v1.transpose() * var_eta.asDiagonal() * v1;
  cov.diagonal() += s.sigma_eps_sq * robs.noise_scale;
  auto chol = linalg::jittered_cholesky(cov, "reduced series covariance");
  Eigen::VectorXd w = chol.llt.matrixL().solve(robs.rotated - mean);
  return -0.5 * w.squaredNorm() - 0.5 * chol.log_det - 0.5 * static_cast<double>(robs.rank()) * linalg::kLog2Pi;
}

Eigen::VectorXd binary_logits(const ChainState& s, const LogisticPcaModel& lpca, const BinaryDiscrepancyBasis& bdisc) {
  if (s.psi.size() != lpca.components()) fail(ErrorKind::InvalidArgument, "psi length does not match J2");
  if (s.nu2.size() != 1) fail(ErrorKind::InvalidArgument, "binary discrepancy has a single column");
  if (bdisc.column.size() != lpca.offset.size()) fail(ErrorKind::InvalidArgument, "binary basis length mismatch");
  return lpca.offset + lpca.basis * s.psi + bdisc.column * s.nu2[0];
}

double binary_log_likelihood(const Eigen::VectorXd& lambda, const Eigen::VectorXd& z) {
  if (lambda.size() != z.size()) fail(ErrorKind::InvalidArgument, "logit and observation lengths differ");
  double ll = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) ll += z[j] * lambda[j] - linalg::log1pexp(lambda[j]);
  return ll;
}

double binary_log_likelihood(const ChainState& s, const BinaryObservation& z2, const LogisticPcaModel& lpca,
                             const BinaryDiscrepancyBasis& bdisc) {
  return binary_log_likelihood(binary_logits(s, lpca, bdisc), z2.values);
}

double inverse_gamma_log_density(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

// ---- priors and posterior ---------------------------------------------------

PriorConfig PriorConfig::from_fit(const Eigen::VectorXd& kappa_mle, const Design& design, double kappa_shape) {
  PriorConfig p;
  p.kappa_shape = kappa_shape;
  p.kappa_scale = (kappa_shape + 1.0) * kappa_mle;
  if (design.size() > 0) {
    p.theta_lower = design.lower();
    p.theta_upper = design.upper();
  }
  p.validate();
  return p;
}

void PriorConfig::validate() const {
  if (!(kappa_shape > 0.0) || !(variance_shape > 0.0) || !(variance_scale > 0.0))
    fail(ErrorKind::InvalidArgument, "prior shape and scale parameters must be positive");
  if (kappa_scale.size() && !(kappa_scale.array() > 0.0).all())
    fail(ErrorKind::InvalidArgument, "sill prior scales must be positive");
  if (!((theta_upper - theta_lower).array() > 0.0).all())
    fail(ErrorKind::InvalidArgument, "parameter prior box must have positive width in every dimension");
}

Mode parse_mode(const std::string& s) {
  if (s == "joint") return Mode::Joint;
  if (s == "binary_only") return Mode::BinaryOnly;
  fail(ErrorKind::InvalidArgument, "mode must be binary_only or joint, got '" + s + "'");
}

std::string mode_name(Mode m) { return m == Mode::Joint ? "joint" : "binary_only"; }

void DataBundle::validate(Mode mode) const {
  if (!z2 || !lpca || !bdisc || !binary_bank) fail(ErrorKind::InvalidArgument, "binary data, model and bank are required");
  if (binary_bank->size() != lpca->components()) fail(ErrorKind::InvalidArgument, "binary bank size does not match J2");
  if (z2->values.size() != lpca->offset.size()) fail(ErrorKind::InvalidArgument, "binary observation length mismatch");
  if (mode == Mode::Joint) {
    if (!robs || !series_bank) fail(ErrorKind::InvalidArgument, "joint mode needs the series observation and bank");
    if (series_bank->size() != robs->j1) fail(ErrorKind::InvalidArgument, "series bank size does not match J1");
    if (prior.kappa_scale.size() != robs->j1) fail(ErrorKind::InvalidArgument, "sill prior scales must have length J1");
  }
  prior.validate();
}

LogPosteriorTerms log_posterior_terms(const ChainState& s, const DataBundle& d, Mode mode) {
  LogPosteriorTerms t;
  const PriorConfig& pr = d.prior;
  const bool inside = (s.theta.array() >= pr.theta_lower.array()).all() &&
                      (s.theta.array() <= pr.theta_upper.array()).all() && ParameterPoint::in_unit_cube(s.theta);
  if (!inside || !(s.alpha2_sq > 0.0)) {
    t.total = kNegInf;
    return t;
  }
  t.binary_priors = -(pr.theta_upper - pr.theta_lower).array().log().sum() +
                    inverse_gamma_log_density(s.alpha2_sq, pr.variance_shape, pr.variance_scale);
  auto psi_pred = bank_predict(*d.binary_bank, s.theta);
  for (Eigen::Index j = 0; j < s.psi.size(); ++j)
    t.psi_prior += normal_log_density(s.psi[j], psi_pred.mean[j], psi_pred.variance[j]);
  for (Eigen::Index j = 0; j < s.nu2.size(); ++j) t.nu2_prior += normal_log_density(s.nu2[j], 0.0, s.alpha2_sq);
  t.binary = binary_log_likelihood(s, *d.z2, *d.lpca, *d.bdisc);
  t.total = t.binary_priors + t.psi_prior + t.nu2_prior + t.binary;
  if (mode == Mode::Joint) {
    if (!(s.alpha1_sq > 0.0) || !(s.sigma_eps_sq > 0.0) || s.kappa1.size() != pr.kappa_scale.size() ||
        !(s.kappa1.array() > 0.0).all() || !s.correlations_valid()) {
      t.total = kNegInf;
      return t;
    }
    for (Eigen::Index j = 0; j < s.kappa1.size(); ++j)
      t.series_priors += inverse_gamma_log_density(s.kappa1[j], pr.kappa_shape, pr.kappa_scale[j]);
    t.series_priors += inverse_gamma_log_density(s.alpha1_sq, pr.variance_shape, pr.variance_scale) +
                       inverse_gamma_log_density(s.sigma_eps_sq, pr.variance_shape, pr.variance_scale);
    t.series = series_log_likelihood(s, *d.robs, *d.series_bank);
    t.total += t.series_priors + t.series;
  }
  if (std::isnan(t.total)) t.total = kNegInf;
  return t;
}

double log_posterior(const ChainState& s, const DataBundle& d, Mode mode) { return log_posterior_terms(s, d, mode).total; }

ChainState initial_state(const DataBundle& d, Mode mode) {
  d.validate(mode);
  ChainState s;
  s.theta = d.binary_bank->components.front().design().colwise().mean().transpose();
  s.theta = s.theta.cwiseMax(d.prior.theta_lower).cwiseMin(d.prior.theta_upper);
  s.psi = bank_predict(*d.binary_bank, s.theta).mean;
  s.nu2 = Eigen::VectorXd::Zero(1);
  const double mode_var = d.prior.variance_scale / (d.prior.variance_shape + 1.0);
  s.alpha1_sq = s.alpha2_sq = s.sigma_eps_sq = mode_var;
  if (mode == Mode::Joint) {
    s.kappa1 = d.series_bank->fitted_kappas();
    s.r_nu = Eigen::MatrixXd::Zero(d.robs->m_eff, 1);
  } else {
    s.kappa1.resize(0);
    s.r_nu.resize(0, 1);
  }
  return s;
}

}  // namespace redcal
