#include "redcal/linalg.hpp"

#include "redcal/csv.hpp"
#include "redcal/types.hpp"

#include <array>

namespace redcal::linalg {

namespace {
constexpr std::array<double, 6> kLadder{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

bool try_jittered_cholesky(const Eigen::MatrixXd& a, JitteredCholesky* out) {
  const double scale = a.rows() > 0 ? std::max(a.diagonal().mean(), 1e-300) : 1.0;
  if (!a.allFinite()) return false;
  for (double rel : kLadder) {
    const double jitter = rel * scale;
    if (jitter == 0.0) {
      out->llt.compute(a);
    } else {
      Eigen::MatrixXd b = a;
      b.diagonal().array() += jitter;
      out->llt.compute(b);
    }
    if (out->llt.info() == Eigen::Success &&
        (out->llt.matrixLLT().diagonal().array() > 0.0).all()) {
      out->jitter = jitter;
      out->log_det = log_det_from_llt(out->llt);
      return std::isfinite(out->log_det);
    }
  }
  return false;
}

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a, const char* what) {
  JitteredCholesky out;
  if (!try_jittered_cholesky(a, &out))
    fail(ErrorKind::Numeric, std::string(what) + ": Cholesky failed with jitter up to " +
                                 csv::format(kLadder.back()) + " times the mean diagonal");
  return out;
}

void canonicalize_signs(Eigen::MatrixXd& basis, Eigen::MatrixXd* companion) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    // First entry within rounding of the largest magnitude, so symmetric and
    // antisymmetric columns resolve the same way under perturbation.
    const double top = basis.col(j).cwiseAbs().maxCoeff();
    Eigen::Index arg = 0;
    while (std::abs(basis(arg, j)) < top * (1.0 - 1e-6)) ++arg;
    if (basis(arg, j) < 0) {
      basis.col(j) *= -1.0;
      if (companion) companion->col(j) *= -1.0;
    }
  }
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace redcal::linalg
