#pragma once

#include <Eigen/Dense>

#include <functional>

namespace redcal::optimize {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct NelderMeadOptions {
  int max_evaluations = 400;
  double f_tolerance = 1e-8;   ///< absolute spread of simplex values
  double x_tolerance = 1e-6;   ///< simplex diameter
  double initial_step = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization; candidates are projected onto `box`.
/// Non-finite objective values are treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd start,
                             const Box& box, const NelderMeadOptions& options = {});

}  // namespace redcal::optimize
