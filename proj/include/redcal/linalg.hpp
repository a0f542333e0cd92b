#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace redcal::linalg {

/// Cholesky factor obtained after adding `jitter` (relative to the mean
/// diagonal) to the diagonal.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;      ///< absolute amount added to the diagonal
  double log_det = 0.0;
};

/// Tries plain Cholesky, then relative jitter 1e-10, 1e-9, ..., 1e-6.
/// Throws ErrorKind::Numeric naming the last level attempted.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a, const char* what);

/// Same ladder, but reports failure through the return value.
bool try_jittered_cholesky(const Eigen::MatrixXd& a, JitteredCholesky* out);

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt);

/// Flips columns so each column's first largest-magnitude entry (to a relative
/// 1e-6) is positive; applies
/// the same flips to `companion` when given.
void canonicalize_signs(Eigen::MatrixXd& basis, Eigen::MatrixXd* companion = nullptr);

/// Orthonormal basis of the column span (thin Householder Q).
Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a);

/// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace redcal::linalg
