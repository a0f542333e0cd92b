#pragma once

#include "redcal/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace redcal {

/// Exponential kernel basis on the time axis, truncated to its leading
/// left singular vectors (orthonormal columns).
struct SeriesDiscrepancyBasis {
  Eigen::MatrixXd basis;     ///< n x M_eff
  Eigen::VectorXd raw_knots; ///< M knot times
  double range = 0.0;
  Eigen::Index m_eff = 0;
  Eigen::VectorXd singular_values;  ///< leading singular values of the raw kernel matrix
};

/// Single-column binary basis built from the signed mismatch rate r.
struct BinaryDiscrepancyBasis {
  Eigen::VectorXd column;
  double threshold = 0.5;
  Eigen::VectorXd mismatch;
  std::vector<std::string> warnings;
};

/// Raw n x M matrix exp(-|t_i - a_j| / range) with knots evenly spread over
/// [t_1, t_n].
Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& times, const Eigen::VectorXd& knots, double range);
Eigen::VectorXd even_knots(const Eigen::VectorXd& times, Eigen::Index count);

SeriesDiscrepancyBasis build_kernel_basis(const Eigen::VectorXd& times, Eigen::Index knots, double range,
                                          Eigen::Index m_eff);

BinaryDiscrepancyBasis build_binary_basis(const BinaryEnsemble& e, const BinaryObservation& z, double c);
BinaryDiscrepancyBasis build_binary_basis(const Eigen::MatrixXd& runs, const Eigen::VectorXd& z, double c);

/// Squared-exponential covariance sill * exp(-(dt / range)^2).
Eigen::MatrixXd squared_exponential_cov(const Eigen::VectorXd& times, double sill, double range);
Eigen::VectorXd simulate_series_discrepancy(const Eigen::VectorXd& times, double sill, double range,
                                            std::uint64_t seed);

/// obs - (pixel-wise mean of the keep_fraction runs closest to obs in MSE).
Eigen::VectorXd common_binary_discrepancy(const Eigen::MatrixXd& thickness, const Eigen::VectorXd& thickness_obs,
                                          double keep_fraction);
/// Indices (ascending MSE) selected by common_binary_discrepancy.
std::vector<Eigen::Index> closest_runs(const Eigen::MatrixXd& thickness, const Eigen::VectorXd& thickness_obs,
                                       double keep_fraction);

void save_series_discrepancy(const SeriesDiscrepancyBasis& b, const std::filesystem::path& path);
SeriesDiscrepancyBasis load_series_discrepancy(const std::filesystem::path& path);
void save_binary_discrepancy(const BinaryDiscrepancyBasis& b, const std::filesystem::path& path);
BinaryDiscrepancyBasis load_binary_discrepancy(const std::filesystem::path& path);

}  // namespace redcal
