#pragma once

#include "redcal/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace redcal {

enum class MatrixKind { Design, Series, Binary, Observation };

/// Raw contents of one of the CSV layouts after kind-specific validation.
struct MatrixFile {
  MatrixKind kind{};
  std::vector<std::string> header;
  Eigen::MatrixXd values;             ///< data rows only
  std::vector<std::string> labels;    ///< design files: optional run labels
  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

MatrixFile load_matrix(const std::filesystem::path& path, MatrixKind kind);

Design load_design(const std::filesystem::path& path);
void save_design(const Design& design, const std::filesystem::path& path);

SeriesEnsemble load_series(const std::filesystem::path& path, const Design& design);
void save_series(const SeriesEnsemble& e, const std::filesystem::path& path);

/// Binary ensembles travel as a CSV plus a JSON manifest describing the grid.
BinaryEnsemble load_binary(const std::filesystem::path& path, const std::filesystem::path& manifest,
                           const Design& design);
void save_binary(const BinaryEnsemble& e, const std::filesystem::path& path,
                 const std::filesystem::path& manifest);

Grid load_grid_manifest(const std::filesystem::path& manifest);
void save_grid_manifest(const Grid& grid, const std::filesystem::path& manifest);

/// Real-valued field on the grid (e.g. ice thickness), binary-CSV layout.
Eigen::MatrixXd load_field(const std::filesystem::path& path, const Grid& grid);
void save_field(const Eigen::MatrixXd& values, const Grid& grid, const std::filesystem::path& path);

SeriesObservation load_series_observation(const std::filesystem::path& path,
                                          const Eigen::VectorXd& times);
void save_series_observation(const SeriesObservation& z, const Eigen::VectorXd& times,
                             const std::filesystem::path& path);

BinaryObservation load_binary_observation(const std::filesystem::path& path, const Grid& grid);
void save_binary_observation(const BinaryObservation& z, const Grid& grid,
                             const std::filesystem::path& path);

std::vector<std::string> grid_header(const Grid& grid);

struct ExclusionResult {
  SeriesEnsemble retained;
  std::vector<Eigen::Index> retained_rows;
  std::vector<Eigen::Index> excluded_rows;
  std::vector<std::string> warnings;
};

/// Drops runs whose position reaches `threshold_position` (at or below it)
/// at any time strictly before `cutoff_time`.
ExclusionResult exclude_unrealistic_runs(const SeriesEnsemble& e, double threshold_position,
                                         double cutoff_time);

}  // namespace redcal
