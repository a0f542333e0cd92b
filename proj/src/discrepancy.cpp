#include "redcal/discrepancy.hpp"

#include "redcal/csv.hpp"
#include "redcal/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace redcal {

Eigen::VectorXd even_knots(const Eigen::VectorXd& times, Eigen::Index count) {
  if (count < 2) fail(ErrorKind::InvalidArgument, "at least 2 knots are required");
  if (times.size() < 2) fail(ErrorKind::InvalidArgument, "time axis needs at least 2 points");
  return Eigen::VectorXd::LinSpaced(count, times[0], times[times.size() - 1]);
}

Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& times, const Eigen::VectorXd& knots, double range) {
  if (!(range > 0.0)) fail(ErrorKind::InvalidArgument, "kernel range must be positive");
  Eigen::MatrixXd k(times.size(), knots.size());
  for (Eigen::Index j = 0; j < knots.size(); ++j)
    k.col(j) = (-(times.array() - knots[j]).abs() / range).exp().matrix();
  return k;
}

SeriesDiscrepancyBasis build_kernel_basis(const Eigen::VectorXd& times, Eigen::Index knots, double range,
                                          Eigen::Index m_eff) {
  const Eigen::Index n = times.size();
  if (knots > n) fail(ErrorKind::InvalidArgument, "knot count exceeds the number of time points");
  if (m_eff < 1 || m_eff > std::min(knots, n))
    fail(ErrorKind::InvalidArgument, "retained eigenvector count must lie in [1, min(M, n)]");
  SeriesDiscrepancyBasis out;
  out.raw_knots = even_knots(times, knots);
  out.range = range;
  out.m_eff = m_eff;
  Eigen::MatrixXd raw = kernel_matrix(times, out.raw_knots, range);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(raw, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = s[0] * 1e-12 * static_cast<double>(std::max(n, knots));
  Eigen::Index rank = (s.array() > tol).count();
  if (m_eff > rank)
    fail(ErrorKind::Numeric, "kernel basis has numerical rank " + std::to_string(rank) + ", cannot retain " +
                                 std::to_string(m_eff) + " eigenvectors");
  out.basis = svd.matrixU().leftCols(m_eff);
  out.singular_values = s.head(m_eff);
  linalg::canonicalize_signs(out.basis);
  return out;
}

BinaryDiscrepancyBasis build_binary_basis(const BinaryEnsemble& e, const BinaryObservation& z, double c) {
  return build_binary_basis(e.values(), z.values, c);
}

BinaryDiscrepancyBasis build_binary_basis(const Eigen::MatrixXd& runs, const Eigen::VectorXd& z, double c) {
  if (runs.cols() != z.size()) fail(ErrorKind::InvalidArgument, "observation length does not match the ensemble");
  if (!(c > 0.0 && c < 1.0)) fail(ErrorKind::InvalidArgument, "mismatch threshold must lie in (0, 1)");
  if (runs.rows() < 1) fail(ErrorKind::InvalidArgument, "ensemble has no runs");
  check_binary_entries(runs, "binary ensemble");
  check_binary_entries(z, "binary observation");
  BinaryDiscrepancyBasis out;
  out.threshold = c;
  // sgn(y - z) 1(y != z) is simply y - z for 0/1 data.
  out.mismatch = (runs.rowwise() - z.transpose()).colwise().mean().transpose();
  out.column = Eigen::VectorXd::Zero(z.size());
  Eigen::Index clipped = 0;
  constexpr double kEdge = 1.0 - 1e-6;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    double r = out.mismatch[j];
    if (std::abs(r) < c) continue;
    if (std::abs(r) >= 1.0) {
      r = std::copysign(kEdge, r);
      ++clipped;
    }
    out.column[j] = std::log((1.0 + r) / (1.0 - r));
  }
  if (clipped > 0)
    out.warnings.push_back(std::to_string(clipped) + " pixel(s) mismatch in every run; rate clipped to 1 - 1e-6");
  return out;
}

Eigen::MatrixXd squared_exponential_cov(const Eigen::VectorXd& times, double sill, double range) {
  if (sill < 0.0 || !(range > 0.0)) fail(ErrorKind::InvalidArgument, "sill must be non-negative and range positive");
  const Eigen::Index n = times.size();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      double d = (times[i] - times[j]) / range;
      c(i, j) = sill * std::exp(-d * d);
    }
  return c;
}

Eigen::VectorXd simulate_series_discrepancy(const Eigen::VectorXd& times, double sill, double range,
                                            std::uint64_t seed) {
  Eigen::MatrixXd c = squared_exponential_cov(times, sill, range);
  if (sill == 0.0) return Eigen::VectorXd::Zero(times.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(times.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  // Pivoted LDL^T tolerates the near-singular smooth covariance.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
  Eigen::VectorXd y = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
  y = ldlt.matrixL() * y;
  return ldlt.transpositionsP().transpose() * y;
}

std::vector<Eigen::Index> closest_runs(const Eigen::MatrixXd& thickness, const Eigen::VectorXd& thickness_obs,
                                       double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) fail(ErrorKind::InvalidArgument, "keep fraction must lie in (0, 1]");
  if (thickness.cols() != thickness_obs.size()) fail(ErrorKind::InvalidArgument, "observed field length mismatch");
  const Eigen::Index p = thickness.rows();
  auto keep = static_cast<Eigen::Index>(std::floor(keep_fraction * static_cast<double>(p) + 1e-9));
  if (keep < 2) fail(ErrorKind::InvalidArgument, "fewer than 2 runs selected for the common discrepancy");
  Eigen::VectorXd mse = (thickness.rowwise() - thickness_obs.transpose()).rowwise().squaredNorm() /
                        static_cast<double>(thickness.cols());
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return mse[a] < mse[b]; });
  idx.resize(static_cast<std::size_t>(keep));
  return idx;
}

Eigen::VectorXd common_binary_discrepancy(const Eigen::MatrixXd& thickness, const Eigen::VectorXd& thickness_obs,
                                          double keep_fraction) {
  auto idx = closest_runs(thickness, thickness_obs, keep_fraction);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(thickness.cols());
  for (auto i : idx) mean += thickness.row(i).transpose();
  mean /= static_cast<double>(idx.size());
  return thickness_obs - mean;
}

namespace {

std::filesystem::path meta_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  return p.replace_extension(".json");
}

}  // namespace

void save_series_discrepancy(const SeriesDiscrepancyBasis& b, const std::filesystem::path& path) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < b.basis.cols(); ++j) header.push_back("d" + std::to_string(j));
  csv::write_matrix(path, header, b.basis);
  nlohmann::json j;
  j["knots"] = b.raw_knots.size();
  j["knot_first"] = b.raw_knots.size() ? b.raw_knots[0] : 0.0;
  j["knot_last"] = b.raw_knots.size() ? b.raw_knots[b.raw_knots.size() - 1] : 0.0;
  j["range"] = b.range;
  j["m_eff"] = b.m_eff;
  j["singular_values"] = std::vector<double>(b.singular_values.data(), b.singular_values.data() + b.singular_values.size());
  csv::write_text(meta_path(path), j.dump(1) + "\n");
}

SeriesDiscrepancyBasis load_series_discrepancy(const std::filesystem::path& path) {
  SeriesDiscrepancyBasis b;
  std::vector<std::string> header;
  b.basis = csv::read_matrix(path, &header);
  try {
    auto j = nlohmann::json::parse(csv::read_text(meta_path(path)));
    b.raw_knots = Eigen::VectorXd::LinSpaced(j.at("knots").get<Eigen::Index>(), j.at("knot_first").get<double>(),
                                             j.at("knot_last").get<double>());
    b.range = j.at("range").get<double>();
    b.m_eff = j.at("m_eff").get<Eigen::Index>();
    auto s = j.at("singular_values").get<std::vector<double>>();
    b.singular_values = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Parse, meta_path(path).string() + ": " + ex.what());
  }
  if (b.basis.cols() != b.m_eff) fail(ErrorKind::Parse, path.string() + ": column count disagrees with metadata");
  return b;
}

void save_binary_discrepancy(const BinaryDiscrepancyBasis& b, const std::filesystem::path& path) {
  Eigen::MatrixXd m(b.column.size(), 2);
  m.col(0) = b.mismatch;
  m.col(1) = b.column;
  csv::write_matrix(path, {"mismatch", "k2d"}, m);
  nlohmann::json j;
  j["threshold"] = b.threshold;
  j["columns"] = 1;
  j["warnings"] = b.warnings;
  csv::write_text(meta_path(path), j.dump(1) + "\n");
}

BinaryDiscrepancyBasis load_binary_discrepancy(const std::filesystem::path& path) {
  BinaryDiscrepancyBasis b;
  std::vector<std::string> header;
  Eigen::MatrixXd m = csv::read_matrix(path, &header);
  if (m.cols() != 2) fail(ErrorKind::Parse, path.string() + ": expected columns mismatch,k2d");
  b.mismatch = m.col(0);
  b.column = m.col(1);
  try {
    auto j = nlohmann::json::parse(csv::read_text(meta_path(path)));
    b.threshold = j.at("threshold").get<double>();
    b.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Parse, meta_path(path).string() + ": " + ex.what());
  }
  return b;
}

}  // namespace redcal
