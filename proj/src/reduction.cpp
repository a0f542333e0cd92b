#include "redcal/reduction.hpp"

#include "redcal/csv.hpp"
#include "redcal/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace redcal {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::MatrixXd PcaModel::eigenvectors() const {
  return basis * eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
}

// ---- classical PCA ----------------------------------------------------------

PcaFit fit_pca(const MatrixXd& values, Index components) {
  const Index q = values.rows(), n = values.cols();
  if (q < 2) fail(ErrorKind::InvalidArgument, "PCA needs at least 2 runs, got " + std::to_string(q));
  if (components < 1) fail(ErrorKind::InvalidArgument, "PCA needs at least one component");
  if (components > std::min(q, n))
    fail(ErrorKind::InvalidArgument, "J1=" + std::to_string(components) + " exceeds min(q, n)=" +
                                         std::to_string(std::min(q, n)));

  VectorXd mean = values.colwise().mean().transpose();
  MatrixXd centered = values.rowwise() - mean.transpose();
  Eigen::BDCSVD<MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();

  const double scale = values.cwiseAbs().maxCoeff() * std::sqrt(static_cast<double>(q) * static_cast<double>(n));
  const double tol = static_cast<double>(std::max(q, n)) * std::numeric_limits<double>::epsilon() *
                     std::max(scale, s.size() ? s[0] : 0.0);
  Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  if (rank == 0) fail(ErrorKind::InvalidArgument, "zero variance: ensemble has rank 0");
  if (components > rank)
    fail(ErrorKind::InvalidArgument, "J1=" + std::to_string(components) + " exceeds the achievable rank " +
                                         std::to_string(rank));

  MatrixXd v = svd.matrixV().leftCols(components);
  MatrixXd u = svd.matrixU().leftCols(components);
  linalg::canonicalize_signs(v, &u);

  const double dof = static_cast<double>(q - 1);
  PcaFit fit;
  fit.model.mean = std::move(mean);
  fit.model.eigenvalues = s.head(components).array().square() / dof;
  fit.model.basis = v * fit.model.eigenvalues.cwiseSqrt().asDiagonal();
  fit.model.total_variance = centered.squaredNorm() / dof;
  fit.model.training_runs = q;
  fit.scores.scores = u * std::sqrt(dof);
  return fit;
}

PcaFit fit_pca(const SeriesEnsemble& e, Index components) { return fit_pca(e.values(), components); }

Projection project_series(const PcaModel& model, const VectorXd& z) {
  if (z.size() != model.mean.size())
    fail(ErrorKind::InvalidArgument, "observation length " + std::to_string(z.size()) + " does not match n=" +
                                         std::to_string(model.mean.size()));
  VectorXd centered = z - model.mean;
  // Basis columns are orthogonal with squared norms equal to the eigenvalues.
  Projection out;
  out.coefficients = (model.basis.transpose() * centered).cwiseQuotient(model.eigenvalues);
  out.residual = centered - model.basis * out.coefficients;
  return out;
}

VectorXd reconstruct(const PcaModel& model, const VectorXd& scores) {
  if (scores.size() != model.components())
    fail(ErrorKind::InvalidArgument, "score length does not match component count");
  return model.mean + model.basis * scores;
}

// ---- logistic PCA -----------------------------------------------------------

double bernoulli_deviance(const MatrixXd& x, const MatrixXd& gamma) {
  double acc = 0.0;
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      double g = gamma(i, j);
      acc += linalg::log1pexp(g) - x(i, j) * g;
    }
  return 2.0 * acc;
}

namespace {

MatrixXd logistic_of(const MatrixXd& gamma) {
  return gamma.unaryExpr([](double g) { return linalg::logistic(g); });
}

MatrixXd assemble_logits(const VectorXd& offset, const MatrixXd& q, const MatrixXd& b) {
  MatrixXd gamma = q * b.transpose();
  gamma.rowwise() += offset.transpose();
  return gamma;
}

}  // namespace

LogisticPcaFit fit_logistic_pca(const MatrixXd& x, Index components, const LogisticPcaOptions& options) {
  const Index p = x.rows(), m = x.cols();
  if (p < 2) fail(ErrorKind::InvalidArgument, "logistic PCA needs at least 2 runs");
  if (components < 1 || components > std::min(p, m))
    fail(ErrorKind::InvalidArgument, "J2=" + std::to_string(components) + " must lie in [1, min(p, m)=" +
                                         std::to_string(std::min(p, m)) + "]");
  check_binary_entries(x, "logistic PCA input");

  const double lo = linalg::logistic(-kLogitClip), hi = linalg::logistic(kLogitClip);
  VectorXd offset = x.colwise().mean().transpose().unaryExpr([&](double f) {
    f = std::clamp(f, lo, hi);
    return std::clamp(std::log(f / (1.0 - f)), -kLogitClip, kLogitClip);
  });
  MatrixXd q = MatrixXd::Zero(p, components);
  MatrixXd b = MatrixXd::Zero(m, components);
  MatrixXd v;  // row-space basis (m x J) carried between iterations

  LogisticPcaFit fit;
  auto& model = fit.model;
  MatrixXd gamma = assemble_logits(offset, q, b);
  double deviance = bernoulli_deviance(x, gamma);
  model.deviance_trace.push_back(deviance);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    // Quadratic majorizer with curvature 1/4: working response z.
    MatrixXd z = gamma + 4.0 * (x - logistic_of(gamma));
    VectorXd zbar = z.colwise().mean().transpose();
    VectorXd next_offset = zbar.cwiseMax(-kLogitClip).cwiseMin(kLogitClip);
    MatrixXd pz = z.rowwise() - zbar.transpose();

    MatrixXd next_q, next_b;
    if (v.size() == 0) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pz * pz.transpose());
      next_q = eig.eigenvectors().rightCols(components).rowwise().reverse();
      next_b = pz.transpose() * next_q;
      v = linalg::orthonormal_columns(next_b);
    } else {
      // Warm-started subspace steps never increase ||pz - L|| relative to the
      // previous iterate, which keeps the MM sequence monotone.
      for (int sweep = 0; sweep < 2; ++sweep) {
        next_q = linalg::orthonormal_columns(pz * v);
        next_b = pz.transpose() * next_q;
        v = linalg::orthonormal_columns(next_b);
      }
    }

    MatrixXd next_gamma = assemble_logits(next_offset, next_q, next_b);
    double next_deviance = bernoulli_deviance(x, next_gamma);
    if (next_deviance > deviance) {
      // Only reachable through rounding once the fit has stalled.
      model.converged = (next_deviance - deviance) <= 1e-10 * std::max(1.0, deviance);
      break;
    }
    offset = std::move(next_offset);
    q = std::move(next_q);
    b = std::move(next_b);
    gamma = std::move(next_gamma);
    const double change = (deviance - next_deviance) / std::max(deviance, 1e-300);
    deviance = next_deviance;
    model.deviance_trace.push_back(deviance);
    model.iterations = iter + 1;
    if (change < options.tol || deviance <= 0.0) {
      model.converged = true;
      break;
    }
  }
  if (!model.converged)
    fit.warnings.push_back("logistic PCA did not converge within " + std::to_string(options.max_iter) +
                           " iterations");

  // Re-express L = q b^T as (scores) (basis)^T with unit-variance scores.
  Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  MatrixXd u = q * svd.matrixV();
  MatrixXd w = svd.matrixU();
  const VectorXd& s = svd.singularValues();
  const double dof = static_cast<double>(p - 1);
  const double degenerate = 1e-9 * std::sqrt(static_cast<double>(p) * static_cast<double>(m));
  model.scores = MatrixXd::Zero(p, components);
  model.basis = MatrixXd::Zero(m, components);
  for (Index j = 0; j < components; ++j) {
    if (s[j] <= degenerate) continue;
    model.scores.col(j) = u.col(j) * std::sqrt(dof);
    model.basis.col(j) = w.col(j) * (s[j] / std::sqrt(dof));
  }
  linalg::canonicalize_signs(model.basis, &model.scores);
  model.offset = std::move(offset);
  return fit;
}

LogisticPcaFit fit_logistic_pca(const BinaryEnsemble& e, Index components, const LogisticPcaOptions& options) {
  return fit_logistic_pca(e.values(), components, options);
}

VectorXd logits(const LogisticPcaModel& model, const VectorXd& scores) {
  if (scores.size() != model.components())
    fail(ErrorKind::InvalidArgument, "score length does not match component count");
  return model.offset + model.basis * scores;
}

VectorXd reconstruct(const LogisticPcaModel& model, const VectorXd& scores) {
  return logits(model, scores).unaryExpr(
      [](double g) { return linalg::logistic(std::clamp(g, -kLogitClip, kLogitClip)); });
}

// ---- persistence ------------------------------------------------------------

namespace {

void append_section(std::ostringstream& out, const char* name, const MatrixXd& values) {
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j)
      out << name << ',' << i << ',' << j << ',' << csv::format(values(i, j)) << '\n';
}

struct Sections {
  std::map<std::string, std::vector<std::tuple<Index, Index, double>>> entries;

  MatrixXd get(const std::string& name, const fs::path& where) const {
    auto it = entries.find(name);
    if (it == entries.end()) fail(ErrorKind::Parse, where.string() + ": missing section '" + name + "'");
    Index rows = 0, cols = 0;
    for (auto [i, j, v] : it->second) {
      rows = std::max(rows, i + 1);
      cols = std::max(cols, j + 1);
    }
    MatrixXd out = MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
    for (auto [i, j, v] : it->second) out(i, j) = v;
    return out;
  }
};

Sections read_sections(const fs::path& path) {
  auto rows = csv::read(path);
  if (rows.empty() || rows.front() != csv::Row{"section", "row", "col", "value"})
    fail(ErrorKind::Parse, path.string() + ": expected header section,row,col,value");
  Sections s;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (r.size() != 4) fail(ErrorKind::Parse, path.string() + ": malformed row " + std::to_string(k));
    const std::string where = path.string() + ": row " + std::to_string(k);
    s.entries[r[0]].emplace_back(static_cast<Index>(csv::parse_double(r[1], where)),
                                 static_cast<Index>(csv::parse_double(r[2], where)), csv::parse_double(r[3], where));
  }
  return s;
}

std::vector<std::string> score_header(Index j) {
  std::vector<std::string> h;
  for (Index k = 0; k < j; ++k) h.push_back("pc_" + std::to_string(k + 1));
  return h;
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(csv::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace

void save_pca(const PcaFit& fit, const fs::path& dir) {
  std::ostringstream out;
  out << "section,row,col,value\n";
  append_section(out, "mean", fit.model.mean);
  append_section(out, "eigenvalue", fit.model.eigenvalues);
  append_section(out, "basis", fit.model.basis);
  csv::write_text(dir / "pca.csv", out.str());
  csv::write_matrix(dir / "scores.csv", score_header(fit.model.components()), fit.scores.scores);
  nlohmann::ordered_json meta;
  meta["channel"] = "series";
  meta["J"] = fit.model.components();
  meta["n"] = fit.model.mean.size();
  meta["training_runs"] = fit.model.training_runs;
  meta["total_variance"] = fit.model.total_variance;
  csv::write_text(dir / "meta.json", meta.dump(2) + "\n");
}

PcaFit load_pca(const fs::path& dir) {
  if (!fs::exists(dir / "pca.csv")) fail(ErrorKind::MissingArtifact, (dir / "pca.csv").string() + " missing");
  auto sections = read_sections(dir / "pca.csv");
  auto meta = read_json(dir / "meta.json");
  PcaFit fit;
  fit.model.mean = sections.get("mean", dir / "pca.csv").col(0);
  fit.model.eigenvalues = sections.get("eigenvalue", dir / "pca.csv").col(0);
  fit.model.basis = sections.get("basis", dir / "pca.csv");
  fit.model.total_variance = meta.at("total_variance").get<double>();
  fit.model.training_runs = meta.at("training_runs").get<Index>();
  fit.scores.scores = csv::read_matrix(dir / "scores.csv", nullptr);
  return fit;
}

void save_logistic_pca(const LogisticPcaModel& model, const fs::path& dir) {
  std::ostringstream out;
  out << "section,row,col,value\n";
  append_section(out, "offset", model.offset);
  append_section(out, "basis", model.basis);
  csv::write_text(dir / "pca.csv", out.str());
  csv::write_matrix(dir / "scores.csv", score_header(model.components()), model.scores);
  nlohmann::ordered_json meta;
  meta["channel"] = "binary";
  meta["J"] = model.components();
  meta["m"] = model.offset.size();
  meta["iterations"] = model.iterations;
  meta["converged"] = model.converged;
  meta["deviance_trace"] = model.deviance_trace;
  csv::write_text(dir / "meta.json", meta.dump(2) + "\n");
}

LogisticPcaModel load_logistic_pca(const fs::path& dir) {
  if (!fs::exists(dir / "pca.csv")) fail(ErrorKind::MissingArtifact, (dir / "pca.csv").string() + " missing");
  auto sections = read_sections(dir / "pca.csv");
  auto meta = read_json(dir / "meta.json");
  LogisticPcaModel model;
  model.offset = sections.get("offset", dir / "pca.csv").col(0);
  model.basis = sections.get("basis", dir / "pca.csv");
  model.scores = csv::read_matrix(dir / "scores.csv", nullptr);
  model.iterations = meta.at("iterations").get<int>();
  model.converged = meta.at("converged").get<bool>();
  model.deviance_trace = meta.at("deviance_trace").get<std::vector<double>>();
  return model;
}

}  // namespace redcal
