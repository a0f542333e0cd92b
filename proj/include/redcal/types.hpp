#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace redcal {

enum class ErrorKind {
  InvalidArgument,
  Parse,
  Io,
  Numeric,
  MissingArtifact,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline constexpr int kParamDim = 4;

using Theta = Eigen::Vector4d;
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, kParamDim>;

/// A point of the remapped unit-cube input space (OCFAC, CALV, CRH, TAU).
class ParameterPoint {
 public:
  explicit ParameterPoint(const Theta& coords);
  ParameterPoint(double p1, double p2, double p3, double p4)
      : ParameterPoint(Theta(p1, p2, p3, p4)) {}

  const Theta& coords() const noexcept { return coords_; }
  double operator[](int i) const { return coords_[i]; }
  bool operator==(const ParameterPoint& other) const { return coords_ == other.coords_; }

  static bool in_unit_cube(const Theta& coords) noexcept;

 private:
  Theta coords_;
};

/// Ordered design points, one row per simulator run. Rows are distinct.
class Design {
 public:
  Design() = default;
  explicit Design(DesignMatrix points, std::vector<std::string> labels = {});

  Eigen::Index size() const noexcept { return points_.rows(); }
  const DesignMatrix& points() const noexcept { return points_; }
  ParameterPoint point(Eigen::Index i) const { return ParameterPoint(points_.row(i).transpose()); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  Design subset(const std::vector<Eigen::Index>& rows) const;
  Theta lower() const { return points_.colwise().minCoeff().transpose(); }
  Theta upper() const { return points_.colwise().maxCoeff().transpose(); }
  Theta centroid() const { return points_.colwise().mean().transpose(); }

  bool operator==(const Design& other) const {
    return points_ == other.points_ && labels_ == other.labels_;
  }

 private:
  DesignMatrix points_;
  std::vector<std::string> labels_;
};

/// Continuous channel: q runs by n time points.
class SeriesEnsemble {
 public:
  SeriesEnsemble() = default;
  SeriesEnsemble(Eigen::MatrixXd values, Eigen::VectorXd times, Design design);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const Eigen::VectorXd& times() const noexcept { return times_; }
  const Design& design() const noexcept { return design_; }
  Eigen::Index runs() const noexcept { return values_.rows(); }
  Eigen::Index length() const noexcept { return values_.cols(); }

  SeriesEnsemble subset(const std::vector<Eigen::Index>& rows) const;

  bool operator==(const SeriesEnsemble& o) const {
    return values_ == o.values_ && times_ == o.times_ && design_ == o.design_;
  }

 private:
  Eigen::MatrixXd values_;
  Eigen::VectorXd times_;
  Design design_;
};

/// Physical grid with optional off-domain mask. Cells are stored row-major;
/// masked cells never appear in a binary ensemble.
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, std::vector<int> masked = {}, std::string units = "km");

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  const std::vector<int>& masked() const noexcept { return masked_; }
  const std::string& units() const noexcept { return units_; }
  const std::vector<std::pair<int, int>>& cells() const noexcept { return cells_; }
  Eigen::Index active() const noexcept { return static_cast<Eigen::Index>(cells_.size()); }

  bool operator==(const Grid& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && masked_ == o.masked_ && units_ == o.units_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> masked_;
  std::string units_;
  std::vector<std::pair<int, int>> cells_;
};

/// Binary channel: p runs by m active grid cells, entries exactly 0 or 1.
class BinaryEnsemble {
 public:
  BinaryEnsemble() = default;
  BinaryEnsemble(Eigen::MatrixXd values, Grid grid, Design design);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const Grid& grid() const noexcept { return grid_; }
  const Design& design() const noexcept { return design_; }
  Eigen::Index runs() const noexcept { return values_.rows(); }
  Eigen::Index cells() const noexcept { return values_.cols(); }

  bool operator==(const BinaryEnsemble& o) const {
    return values_ == o.values_ && grid_ == o.grid_ && design_ == o.design_;
  }

 private:
  Eigen::MatrixXd values_;
  Grid grid_;
  Design design_;
};

struct SeriesObservation {
  Eigen::VectorXd values;
};

struct BinaryObservation {
  Eigen::VectorXd values;
};

void check_binary_entries(const Eigen::Ref<const Eigen::MatrixXd>& values, const std::string& what);

}  // namespace redcal
