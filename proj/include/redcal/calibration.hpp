#pragma once

#include "redcal/discrepancy.hpp"
#include "redcal/emulator.hpp"
#include "redcal/reduction.hpp"
#include "redcal/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace redcal {

/// Least-squares projection of the series observation onto the joint basis
/// K1 = (K1y K1d). The likelihood is evaluated in the rotated coordinates
/// S^{-1} U' (z - mean) of the thin SVD K1 = U S V', which carry the same
/// density as z1r when K1 has full column rank and drop only the directions
/// the data cannot see when it does not.
struct ReducedObservation {
  Eigen::VectorXd z1r;             ///< minimum-norm least-squares solution
  Eigen::MatrixXd projector_gram;  ///< (K1' K1)^{-1}, pseudo-inverse if rank deficient
  Eigen::MatrixXd rotation;        ///< (J1 + M_eff) x r retained right singular vectors
  Eigen::VectorXd rotated;         ///< S^{-1} U' (z - mean)
  Eigen::VectorXd noise_scale;     ///< S^{-2}
  Eigen::MatrixXd nu_gram;         ///< V2' V2 for the discrepancy rows of the rotation
  std::vector<std::string> warnings;
  std::string joint_basis_hash;
  Eigen::Index j1 = 0;
  Eigen::Index m_eff = 0;

  Eigen::Index rank() const { return rotation.cols(); }
};

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kJointBasisRankTol = 1e-8;

ReducedObservation reduce_observation(const SeriesObservation& z, const PcaModel& pca,
                                      const SeriesDiscrepancyBasis& disc);
ReducedObservation reduce_observation(const Eigen::VectorXd& z, const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& k1y, const Eigen::MatrixXd& k1d);

struct ChainState {
  Theta theta = Theta::Constant(0.5);
  Eigen::VectorXd psi;
  Eigen::VectorXd kappa1;
  Eigen::VectorXd nu2;
  double alpha1_sq = 1.0;
  double alpha2_sq = 1.0;
  double sigma_eps_sq = 1.0;
  Eigen::MatrixXd r_nu;  ///< M_eff x L cross-correlations

  /// True when every correlation lies in (-1,1) and I - R R' is positive definite.
  bool correlations_valid() const;
  void validate() const;
};

struct NuMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// nu1 | nu2 with Cov(nu1_i, nu2_j) = alpha1 alpha2 rho_ij.
NuMoments conditional_nu1_moments(const ChainState& s);

double series_log_likelihood(const ChainState& s, const ReducedObservation& robs, const EmulatorBank& bank);
/// Same density from precomputed emulator moments.
double series_log_likelihood(const ChainState& s, const ReducedObservation& robs, const Eigen::VectorXd& mu_eta,
                             const Eigen::VectorXd& var_eta);

Eigen::VectorXd binary_logits(const ChainState& s, const LogisticPcaModel& lpca, const BinaryDiscrepancyBasis& bdisc);
double binary_log_likelihood(const Eigen::VectorXd& lambda, const Eigen::VectorXd& z);
double binary_log_likelihood(const ChainState& s, const BinaryObservation& z2, const LogisticPcaModel& lpca,
                             const BinaryDiscrepancyBasis& bdisc);

double inverse_gamma_log_density(double x, double shape, double scale);

struct PriorConfig {
  double kappa_shape = 50.0;
  Eigen::VectorXd kappa_scale;  ///< per series component
  double variance_shape = 2.0;
  double variance_scale = 3.0;
  Theta theta_lower = Theta::Zero();
  Theta theta_upper = Theta::Ones();

  /// Sill scales give an inverse-gamma mode at the stage-one MLE.
  static PriorConfig from_fit(const Eigen::VectorXd& kappa_mle, const Design& design, double kappa_shape = 50.0);
  void validate() const;
};

enum class Mode { BinaryOnly, Joint };

Mode parse_mode(const std::string& s);
std::string mode_name(Mode m);

/// Borrowed references to everything the posterior needs. Series members may
/// be null in binary-only mode.
struct DataBundle {
  const ReducedObservation* robs = nullptr;
  const EmulatorBank* series_bank = nullptr;
  const BinaryObservation* z2 = nullptr;
  const LogisticPcaModel* lpca = nullptr;
  const BinaryDiscrepancyBasis* bdisc = nullptr;
  const EmulatorBank* binary_bank = nullptr;
  PriorConfig prior;

  void validate(Mode mode) const;
};

struct LogPosteriorTerms {
  double series = 0.0;
  double binary = 0.0;
  double psi_prior = 0.0;
  double nu2_prior = 0.0;
  double series_priors = 0.0;  ///< kappa1, alpha1^2, sigma_eps^2, R
  double binary_priors = 0.0;  ///< alpha2^2, theta
  double total = 0.0;
};

LogPosteriorTerms log_posterior_terms(const ChainState& s, const DataBundle& d, Mode mode);
double log_posterior(const ChainState& s, const DataBundle& d, Mode mode);

/// Initial state: design centroid, psi at the bank mean, nu2 = 0, variances at
/// prior modes, sills at the stage-one MLE, R = 0.
ChainState initial_state(const DataBundle& d, Mode mode);

// ---- sampler ----------------------------------------------------------------

enum class Block { Theta, Psi, Kappa, Nu2, Variances, Correlation };
inline constexpr int kBlockCount = 6;
std::string block_name(Block b);

/// Initial random-walk scales on the unconstrained coordinates. A zero scale
/// freezes that coordinate for the whole run.
struct ProposalScales {
  double theta = 0.3;
  double psi = 0.3;
  double kappa = 0.1;
  double nu2 = 0.3;
  double alpha2 = 0.3;
  double alpha1 = 0.3;
  double sigma = 0.3;
  double r = 0.1;
};

struct McmcOptions {
  long iterations = 70000;     ///< retained iterations
  double burn_in_fraction = 0.2;
  int thin = 1;
  std::uint64_t seed = 1;
  ProposalScales scales;
  bool adapt = true;
  bool log_proposals = false;
};

struct ProposalRecord {
  Block block = Block::Theta;
  long iteration = 0;
  double current = 0.0;
  double proposed = 0.0;
  double log_u = 0.0;
  bool accepted = false;
};

struct PosteriorChain {
  std::vector<std::string> names;
  Eigen::MatrixXd samples;  ///< stored states, one per row
  Eigen::VectorXd log_post;
  std::map<std::string, double> acceptance;  ///< post-burn-in rate per block; 1 for frozen blocks
  std::vector<std::string> warnings;
  std::vector<ProposalRecord> proposals;
  Eigen::Index j1 = 0, j2 = 0, l = 0, m_eff = 0;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::MatrixXd thetas() const { return samples.leftCols(kParamDim); }
  Eigen::Index column(const std::string& name) const;
  ChainState state(Eigen::Index row) const;
};

/// Column names for a state of the given dimensions.
std::vector<std::string> state_names(Eigen::Index j1, Eigen::Index j2, Eigen::Index l, Eigen::Index m_eff);
Eigen::VectorXd flatten(const ChainState& s);

PosteriorChain run_mcmc(const ChainState& init, const DataBundle& d, Mode mode, const McmcOptions& options);

/// Log target on the sampler's unconstrained coordinates; exposed for tests.
double sampler_log_target(const ChainState& s, const DataBundle& d, Mode mode);

struct StabilityEntry {
  std::string name;
  double ks = 0.0;
  bool pass = true;
};

std::vector<StabilityEntry> half_chain_stability(const PosteriorChain& chain, double threshold = 0.1);

struct ChainDiagnostics {
  std::map<std::string, double> acceptance;
  std::vector<std::string> names;
  std::vector<double> mcse;
  std::vector<StabilityEntry> stability;
  std::vector<std::string> warnings;
};

ChainDiagnostics diagnose(const PosteriorChain& chain);

}  // namespace redcal
