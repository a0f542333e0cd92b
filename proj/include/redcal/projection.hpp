#pragma once

#include "redcal/emulator.hpp"
#include "redcal/reduction.hpp"
#include "redcal/stats.hpp"
#include "redcal/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace redcal {

struct ScalarResponseSet {
  Design design;
  Eigen::VectorXd values;
};

struct TrajectoryResponseSet {
  Design design;
  Eigen::VectorXd times;
  Eigen::MatrixXd values;  ///< p x T
};

/// GP on a mean-centred scalar response; the mean is re-added at prediction.
struct ProjectionEmulator {
  GpComponentModel model;
  double offset = 0.0;

  bool degenerate() const { return model.degenerate(); }
  GpPrediction predict(const Theta& theta) const;
};

ProjectionEmulator fit_projection_emulator(const ScalarResponseSet& r, const GpFitOptions& options = {});

struct TrajectoryEmulator {
  Eigen::VectorXd times;
  PcaModel pca;
  EmulatorBank bank;
};

TrajectoryEmulator fit_trajectory_emulator(const TrajectoryResponseSet& r, Eigen::Index components,
                                           const GpFitOptions& options = {}, int threads = 1);

struct PredictiveSample {
  std::vector<double> values;
  stats::Summary summary;
  stats::DensityGrid density;
  double prob_negative = 0.0;
};

PredictiveSample summarize_sample(std::vector<double> values);

/// One predictive draw per chain state (rows of `thetas`); with `mean_only`
/// the emulator mean is used without predictive noise.
PredictiveSample chain_to_predictive(const Eigen::MatrixXd& thetas, const ProjectionEmulator& model,
                                     std::uint64_t seed, bool mean_only = false);
/// Theta uniform on [0,1]^4 pushed through the emulator predictive.
PredictiveSample prior_predictive(const ProjectionEmulator& model, Eigen::Index draws, std::uint64_t seed,
                                  bool mean_only = false);

struct Envelope {
  Eigen::VectorXd times;
  Eigen::VectorXd mean;
  Eigen::VectorXd lo95;
  Eigen::VectorXd median;
  Eigen::VectorXd hi95;

  /// Width hi95 - lo95 at the time point nearest to t.
  double width_at(double t) const;
};

Envelope trajectory_envelope(const Eigen::MatrixXd& thetas, const TrajectoryEmulator& model, std::uint64_t seed,
                             bool mean_only = false);

void save_projection_sample(const PredictiveSample& s, const std::filesystem::path& path);
void save_projection_summary(const PredictiveSample& posterior, const PredictiveSample& prior,
                             const std::filesystem::path& path);
void save_envelope(const Envelope& e, const std::filesystem::path& path);
Envelope load_envelope(const std::filesystem::path& path);

}  // namespace redcal
