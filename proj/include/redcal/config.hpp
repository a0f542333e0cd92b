#pragma once

#include "redcal/calibration.hpp"
#include "redcal/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace redcal {

/// Every pipeline parameter with its default. Persisted as a flat text file
/// with [section] headers and `key = value` lines.
struct RunConfig {
  synthetic::SyntheticConfig simulate;

  double exclusion_threshold = 437.0;
  double exclusion_cutoff = -10000.0;
  Eigen::Index j1 = 20;
  Eigen::Index j2 = 10;
  int lpca_max_iter = 500;
  double lpca_tol = 1e-6;
  Eigen::Index knots = 1500;
  double kernel_range = 750.0;
  Eigen::Index m_eff = 300;
  double mismatch_threshold = 0.5;

  int restarts = 8;
  int max_evaluations = 400;
  Eigen::Index loo_series_holdout = 60;
  Eigen::Index loo_binary_holdout = 82;
  Eigen::Index trajectory_components = 5;

  std::string mode = "joint";
  long iterations = 70000;
  double burn_in_fraction = 0.2;
  int thin = 1;
  int chains = 1;
  double kappa_shape = 50.0;
  double variance_shape = 2.0;
  double variance_scale = 3.0;
  ProposalScales scales;

  Eigen::Index prior_draws = 10000;
  bool mean_only = false;
  double sea_level_scale = 1.0;

  std::uint64_t seed = 20260101;
  int threads = 1;

  /// Applies one `key = value` pair; `key` may be `section.key` or bare.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::string> keys() const;

  /// Checks module preconditions; errors name the offending key.
  void validate() const;

  std::string to_text() const;
  static RunConfig from_text(const std::string& text, const std::string& origin = "config");
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace redcal
