#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace redcal::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator).
double sd(std::span<const double> x);

/// Linear-interpolation quantile (type 7) for probability `prob` in [0,1].
double quantile(std::span<const double> x, double prob);
std::vector<double> quantiles(std::span<const double> x, std::span<const double> probs);

/// Nonoverlapping batch-means Monte Carlo standard error. `batches` of zero
/// selects floor(sqrt(n)).
double batch_means_mcse(std::span<const double> x, int batches = 0);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Silverman rule-of-thumb bandwidth.
double silverman_bandwidth(std::span<const double> x);

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
};

/// Gaussian kernel density evaluated on `points` evenly spaced points
/// spanning the data range padded by three bandwidths.
DensityGrid kernel_density(std::span<const double> x, int points = 256);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

Summary summarize(std::span<const double> x);

}  // namespace redcal::stats
