#pragma once

#include "redcal/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace redcal {

/// Classical PCA of the series channel. `basis` holds the leading
/// eigenvectors of the column covariance scaled by the square roots of their
/// eigenvalues, so reconstruction is mean + basis * scores with unit-variance
/// scores.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
  double total_variance = 0.0;  ///< trace of the sample covariance
  Eigen::Index training_runs = 0;

  Eigen::Index components() const { return basis.cols(); }
  Eigen::MatrixXd eigenvectors() const;
};

/// Logit decomposition gamma = offset + basis * score, fitted by MM on the
/// Bernoulli deviance.
struct LogisticPcaModel {
  Eigen::VectorXd offset;
  Eigen::MatrixXd basis;
  Eigen::MatrixXd scores;
  std::vector<double> deviance_trace;
  int iterations = 0;
  bool converged = false;

  Eigen::Index components() const { return basis.cols(); }
};

struct ScoreSet {
  Eigen::MatrixXd scores;  ///< runs x components
};

struct PcaFit {
  PcaModel model;
  ScoreSet scores;
};

struct LogisticPcaOptions {
  int max_iter = 500;
  double tol = 1e-6;
};

struct LogisticPcaFit {
  LogisticPcaModel model;
  std::vector<std::string> warnings;
};

inline constexpr double kLogitClip = 10.0;

PcaFit fit_pca(const SeriesEnsemble& e, Eigen::Index components);
PcaFit fit_pca(const Eigen::MatrixXd& values, Eigen::Index components);

LogisticPcaFit fit_logistic_pca(const BinaryEnsemble& e, Eigen::Index components,
                                const LogisticPcaOptions& options = {});
LogisticPcaFit fit_logistic_pca(const Eigen::MatrixXd& binary_values, Eigen::Index components,
                                const LogisticPcaOptions& options = {});

/// Bernoulli deviance -2 * sum [x * g - log(1 + exp(g))] of logits `gamma`.
double bernoulli_deviance(const Eigen::MatrixXd& binary_values, const Eigen::MatrixXd& gamma);

struct Projection {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residual;
};

Projection project_series(const PcaModel& model, const Eigen::VectorXd& z);

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& scores);
/// Per-cell probabilities of the clipped logits.
Eigen::VectorXd reconstruct(const LogisticPcaModel& model, const Eigen::VectorXd& scores);
Eigen::VectorXd logits(const LogisticPcaModel& model, const Eigen::VectorXd& scores);

/// Directory layout: pca.csv (section,row,col,value), scores.csv, meta.json.
void save_pca(const PcaFit& fit, const std::filesystem::path& dir);
PcaFit load_pca(const std::filesystem::path& dir);
void save_logistic_pca(const LogisticPcaModel& model, const std::filesystem::path& dir);
LogisticPcaModel load_logistic_pca(const std::filesystem::path& dir);

}  // namespace redcal
