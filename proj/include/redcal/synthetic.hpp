#pragma once

#include "redcal/types.hpp"

#include <cstdint>

namespace redcal::synthetic {

struct SyntheticConfig {
  int grid_rows = 86;
  int grid_cols = 37;
  double time_start = -15000.0;
  double time_end = 0.0;
  double time_step = 10.0;
  double forecast_end = 5000.0;
  double forecast_step = 10.0;
  int design_levels = 5;
  Theta truth{0.5, 0.5, 0.5, 0.4};
  Theta theta_obs{0.45, 0.55, 0.5, 0.45};
  double discrepancy_sill = 90.0;
  double discrepancy_range = 10500.0;
  double keep_fraction = 0.9;
  std::uint64_t seed = 20260101;

  void validate() const;
};

Eigen::VectorXd time_grid(double start, double end, double step);
Eigen::VectorXd hindcast_times(const SyntheticConfig& c);
/// Strictly positive forecast times step, 2 step, ..., forecast_end.
Eigen::VectorXd forecast_times(const SyntheticConfig& c);
Design factorial_design(int levels);

/// Grounding-line position (km) at each time (years, negative before present).
Eigen::VectorXd forward_series(const Theta& theta, const Eigen::VectorXd& times);
double forward_series_at(const Theta& theta, double t);

struct BinaryField {
  Eigen::VectorXd mask;       ///< 1 where grounded
  Eigen::VectorXd thickness;  ///< rho0(theta) - d(s)
};

/// Normalized elliptic distance of every active grid cell from the grid centre.
Eigen::VectorXd elliptic_distance(const Grid& grid, double anisotropy);
double footprint_radius(const Theta& theta);
BinaryField forward_binary(const Theta& theta, const Grid& grid);

struct VolumeOutput {
  Eigen::VectorXd times;       ///< hindcast then forecast
  Eigen::VectorXd trajectory;  ///< metres sea-level equivalent
  double change_500 = 0.0;
};

/// Forecast volume change for t > 0; zero at t = 0.
double forecast_change(const Theta& theta, double t);
VolumeOutput forward_volume(const Theta& theta, const Eigen::VectorXd& hindcast, const Eigen::VectorXd& forecast);

struct SyntheticEnsemble {
  Design design;
  SeriesEnsemble series;
  BinaryEnsemble binary;
  Eigen::MatrixXd thickness;   ///< p x m
  Eigen::VectorXd volume;      ///< change at +500 years
  Eigen::VectorXd trajectory_times;
  Eigen::MatrixXd trajectory;  ///< p x T
};

SyntheticEnsemble generate_ensemble(const SyntheticConfig& c, int threads = 1);

struct SimulatedObservations {
  SeriesObservation series;
  BinaryObservation binary;
  Eigen::VectorXd series_discrepancy;
  Eigen::VectorXd thickness_discrepancy;
  Theta truth;
  double true_change = 0.0;
};

/// Series: forward output at the truth plus a squared-exponential draw.
/// Binary: truth thickness minus the common discrepancy pattern derived from
/// the reference thickness at theta_obs, dichotomized.
SimulatedObservations make_simulated_observations(const Theta& truth, const SyntheticConfig& c,
                                                  const SyntheticEnsemble& ensemble, std::uint64_t seed);

}  // namespace redcal::synthetic
