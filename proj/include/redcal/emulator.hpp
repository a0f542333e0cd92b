#pragma once

#include "redcal/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace redcal {

/// Hyperparameters of the exponential (L1) kernel with nugget:
/// C(a, b) = kappa * exp(-sum_i |a_i - b_i| / phi_i) + zeta * 1(a == b).
struct GpHyperParams {
  double kappa = 1.0;
  std::array<double, kParamDim> phi{1.0, 1.0, 1.0, 1.0};
  double zeta = 1e-6;
};

/// Box on log-parameters used by the maximum likelihood search.
struct GpBounds {
  double log_kappa_lo = -12.0, log_kappa_hi = 6.0;
  double log_zeta_lo = -12.0, log_zeta_hi = 6.0;
  double log_phi_lo = -5.0, log_phi_hi = 3.0;
};

struct GpFitOptions {
  int restarts = 8;
  GpBounds bounds;
  std::uint64_t seed = 1;
  int max_evaluations = 400;
};

Eigen::MatrixXd correlation_matrix(const DesignMatrix& design, const std::array<double, kParamDim>& phi);
Eigen::VectorXd correlation_vector(const DesignMatrix& design, const Theta& theta,
                                   const std::array<double, kParamDim>& phi);

/// Exact zero-mean Gaussian negative log likelihood, including the
/// log-determinant and (n/2) log(2 pi) terms.
double neg_log_likelihood(const GpHyperParams& h, const DesignMatrix& design, const Eigen::VectorXd& scores);

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// One fitted zero-mean GP. Caches the Cholesky factor of the training
/// covariance and the eigendecomposition of the unit-sill correlation matrix,
/// so predictions under a replaced sill cost O(q^2).
class GpComponentModel {
 public:
  GpComponentModel(GpHyperParams hyper, DesignMatrix design, Eigen::VectorXd train_scores);

  const GpHyperParams& hyper() const noexcept { return hyper_; }
  const DesignMatrix& design() const noexcept { return design_; }
  const Eigen::VectorXd& train_scores() const noexcept { return scores_; }
  double jitter() const noexcept { return jitter_; }
  bool degenerate() const noexcept { return degenerate_; }
  void set_degenerate(bool d) noexcept { degenerate_ = d; }
  double neg_log_likelihood() const noexcept { return nll_; }

  GpPrediction predict(const Theta& theta, std::optional<double> kappa_override = std::nullopt) const;

  /// Pieces of a prediction that depend on theta only; lets callers that
  /// revise the sill many times at a fixed theta skip the O(q^2) work.
  struct ThetaCache {
    Eigen::VectorXd projected;  ///< Q^T r(theta)
  };
  ThetaCache prepare(const Theta& theta) const;
  GpPrediction predict(const ThetaCache& cache, double kappa) const;

  double eigen_residual() const;  ///< max |Q L Q^T - R|

 private:
  GpHyperParams hyper_;
  DesignMatrix design_;
  Eigen::VectorXd scores_;
  double jitter_ = 0.0;
  double nugget_ = 0.0;  ///< zeta plus any jitter needed for factorization
  bool degenerate_ = false;
  double nll_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd eigvecs_;
  Eigen::VectorXd eigvals_;
  Eigen::VectorXd projected_scores_;
};

struct GpStartReport {
  Eigen::VectorXd start;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct GpFitResult {
  GpComponentModel model;
  std::vector<GpStartReport> starts;
};

/// Maximum likelihood fit with `restarts` Nelder-Mead starts over
/// (log phi_1..4, log zeta/kappa); kappa is profiled out in closed form.
GpFitResult fit_component_report(const DesignMatrix& design, const Eigen::VectorXd& scores,
                                 const GpFitOptions& options);
GpComponentModel fit_component(const DesignMatrix& design, const Eigen::VectorXd& scores,
                               const GpFitOptions& options);

struct EmulatorBank {
  std::string channel;  ///< "series", "binary", ...
  std::vector<GpComponentModel> components;

  Eigen::Index size() const { return static_cast<Eigen::Index>(components.size()); }
  Eigen::VectorXd fitted_kappas() const;
};

/// Fits one GP per score column. Components are independent and spread over
/// `threads` workers; each uses a seed derived from options.seed and its index.
EmulatorBank fit_bank(const DesignMatrix& design, const Eigen::MatrixXd& scores, const GpFitOptions& options,
                      std::string channel, int threads = 1);

struct BankPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  ///< diagonal of the (diagonal) covariance
  Eigen::MatrixXd covariance() const { return variance.asDiagonal(); }
};

BankPrediction bank_predict(const EmulatorBank& bank, const Theta& theta,
                            const Eigen::VectorXd* kappa_overrides = nullptr);

// ---- leave-out experiments --------------------------------------------------

/// The `count` design points nearest (Euclidean) to the centre of the cube.
std::vector<Eigen::Index> central_holdout(const Design& design, Eigen::Index count);

struct LooOptions {
  Eigen::Index components = 20;
  GpFitOptions gp;
  int threads = 1;
  int lpca_max_iter = 500;
  double lpca_tol = 1e-6;
};

struct LooRun {
  Eigen::Index run = 0;
  double rmse = 0.0;
  double coverage = 0.0;
};

struct LooReport {
  std::string channel;
  std::vector<LooRun> runs;
  double rmse = 0.0;
  double standardized_rmse = 0.0;  ///< rmse relative to the training-mean predictor
  double coverage = 0.0;           ///< empirical coverage of nominal 90% intervals
};

LooReport leave_out_experiment(const SeriesEnsemble& e, const std::vector<Eigen::Index>& holdout,
                               const LooOptions& options);
LooReport leave_out_experiment(const BinaryEnsemble& e, const std::vector<Eigen::Index>& holdout,
                               const LooOptions& options);

void save_loo_report(const std::vector<LooReport>& reports, const std::filesystem::path& path);

// ---- persistence ------------------------------------------------------------

std::string design_hash(const DesignMatrix& design);
void save_gp(const GpComponentModel& model, const std::string& channel, Eigen::Index index,
             const std::filesystem::path& path);
GpComponentModel load_gp(const std::filesystem::path& path);

/// Writes gp_<channel>_<j>.json for every component.
void save_bank(const EmulatorBank& bank, const std::filesystem::path& dir);
EmulatorBank load_bank(const std::filesystem::path& dir, const std::string& channel);

}  // namespace redcal
