#include "redcal/emulator.hpp"

#include "redcal/csv.hpp"
#include "redcal/linalg.hpp"
#include "redcal/optimize.hpp"
#include "redcal/reduction.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace redcal {

namespace {

// Per-dimension |a_i - b_i| matrices, reused across likelihood evaluations.
struct DistanceCache {
  std::array<Eigen::ArrayXXd, kParamDim> d;

  explicit DistanceCache(const DesignMatrix& x) {
    const Eigen::Index q = x.rows();
    for (int k = 0; k < kParamDim; ++k) {
      d[k].resize(q, q);
      for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index i = 0; i < q; ++i) d[k](i, j) = std::abs(x(i, k) - x(j, k));
    }
  }

  Eigen::MatrixXd correlation(const std::array<double, kParamDim>& phi) const {
    Eigen::ArrayXXd s = d[0] / phi[0];
    for (int k = 1; k < kParamDim; ++k) s += d[k] / phi[k];
    return (-s).exp().matrix();
  }
};

void check_phi(const std::array<double, kParamDim>& phi) {
  for (double v : phi)
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidArgument, "range parameters must be positive");
}

double gaussian_nll(const Eigen::MatrixXd& cov, const Eigen::VectorXd& y, const char* what) {
  auto chol = linalg::jittered_cholesky(cov, what);
  Eigen::VectorXd w = chol.llt.matrixL().solve(y);
  return 0.5 * w.squaredNorm() + 0.5 * chol.log_det + 0.5 * static_cast<double>(y.size()) * linalg::kLog2Pi;
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const DesignMatrix& design, const std::array<double, kParamDim>& phi) {
  check_phi(phi);
  return DistanceCache(design).correlation(phi);
}

Eigen::VectorXd correlation_vector(const DesignMatrix& design, const Theta& theta,
                                   const std::array<double, kParamDim>& phi) {
  Eigen::ArrayXd s = Eigen::ArrayXd::Zero(design.rows());
  for (int k = 0; k < kParamDim; ++k) s += (design.col(k).array() - theta[k]).abs() / phi[k];
  return (-s).exp().matrix();
}

double neg_log_likelihood(const GpHyperParams& h, const DesignMatrix& design, const Eigen::VectorXd& scores) {
  if (design.rows() != scores.size()) fail(ErrorKind::InvalidArgument, "score length does not match design size");
  if (design.rows() < 1) fail(ErrorKind::InvalidArgument, "empty design");
  if (!(h.kappa > 0.0) || h.zeta < 0.0) fail(ErrorKind::InvalidArgument, "kappa must be positive and zeta non-negative");
  Eigen::MatrixXd c = h.kappa * correlation_matrix(design, h.phi);
  c.diagonal().array() += h.zeta;
  return gaussian_nll(c, scores, "GP covariance");
}

// ---- GpComponentModel -------------------------------------------------------

GpComponentModel::GpComponentModel(GpHyperParams hyper, DesignMatrix design, Eigen::VectorXd train_scores)
    : hyper_(hyper), design_(std::move(design)), scores_(std::move(train_scores)) {
  if (design_.rows() != scores_.size()) fail(ErrorKind::InvalidArgument, "score length does not match design size");
  if (!(hyper_.kappa > 0.0) || !(hyper_.zeta > 0.0)) fail(ErrorKind::InvalidArgument, "kappa and zeta must be positive");
  check_phi(hyper_.phi);

  Eigen::MatrixXd r = correlation_matrix(design_, hyper_.phi);
  Eigen::MatrixXd c = hyper_.kappa * r;
  c.diagonal().array() += hyper_.zeta;
  auto chol = linalg::jittered_cholesky(c, "GP training covariance");
  jitter_ = chol.jitter;
  nugget_ = hyper_.zeta + jitter_;
  llt_ = chol.llt;
  alpha_ = llt_.solve(scores_);
  Eigen::VectorXd w = llt_.matrixL().solve(scores_);
  nll_ = 0.5 * w.squaredNorm() + 0.5 * chol.log_det + 0.5 * static_cast<double>(scores_.size()) * linalg::kLog2Pi;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  if (eig.info() != Eigen::Success) fail(ErrorKind::Numeric, "eigendecomposition of GP correlation failed");
  eigvecs_ = eig.eigenvectors();
  eigvals_ = eig.eigenvalues().cwiseMax(0.0);
  projected_scores_ = eigvecs_.transpose() * scores_;
}

GpPrediction GpComponentModel::predict(const Theta& theta, std::optional<double> kappa_override) const {
  if (kappa_override) return predict(prepare(theta), *kappa_override);
  Eigen::VectorXd c = hyper_.kappa * correlation_vector(design_, theta, hyper_.phi);
  GpPrediction p;
  p.mean = c.dot(alpha_);
  Eigen::VectorXd v = llt_.matrixL().solve(c);
  double prior = hyper_.kappa + nugget_;
  p.variance = std::max(prior - v.squaredNorm(), 1e-12 * prior);
  return p;
}

GpComponentModel::ThetaCache GpComponentModel::prepare(const Theta& theta) const {
  return ThetaCache{eigvecs_.transpose() * correlation_vector(design_, theta, hyper_.phi)};
}

GpPrediction GpComponentModel::predict(const ThetaCache& cache, double kappa) const {
  if (!(kappa > 0.0)) fail(ErrorKind::InvalidArgument, "sill override must be positive");
  Eigen::ArrayXd denom = kappa * eigvals_.array() + nugget_;
  const Eigen::ArrayXd& w = cache.projected.array();
  GpPrediction p;
  p.mean = kappa * (w * projected_scores_.array() / denom).sum();
  double prior = kappa + nugget_;
  p.variance = std::max(prior - kappa * kappa * (w.square() / denom).sum(), 1e-12 * prior);
  return p;
}

double GpComponentModel::eigen_residual() const {
  Eigen::MatrixXd r = correlation_matrix(design_, hyper_.phi);
  return (eigvecs_ * eigvals_.asDiagonal() * eigvecs_.transpose() - r).cwiseAbs().maxCoeff();
}

// ---- fitting ----------------------------------------------------------------

namespace {

struct Profiled {
  double value = std::numeric_limits<double>::infinity();
  GpHyperParams hyper;
};

// Profile likelihood over z = (log phi_1..4, log tau), tau = zeta / kappa.
// For fixed z the MLE kappa is y' A^{-1} y / n with A = R + tau I; when kappa
// or zeta leave their box the exact likelihood at the clamped values is used.
Profiled profile(const DistanceCache& dist, const Eigen::VectorXd& y, const Eigen::VectorXd& z, const GpBounds& b) {
  Profiled out;
  for (int k = 0; k < kParamDim; ++k) out.hyper.phi[k] = std::exp(z[k]);
  const double tau = std::exp(z[kParamDim]);
  const double n = static_cast<double>(y.size());
  Eigen::MatrixXd r = dist.correlation(out.hyper.phi);
  Eigen::MatrixXd a = r;
  a.diagonal().array() += tau;
  linalg::JitteredCholesky chol;
  if (!linalg::try_jittered_cholesky(a, &chol)) return out;
  Eigen::VectorXd w = chol.llt.matrixL().solve(y);
  const double quad = w.squaredNorm();
  double log_kappa = std::log(std::max(quad / n, std::numeric_limits<double>::min()));
  const double lk = std::clamp(log_kappa, b.log_kappa_lo, b.log_kappa_hi);
  double log_zeta = lk + z[kParamDim];
  const double lz = std::clamp(log_zeta, b.log_zeta_lo, b.log_zeta_hi);
  out.hyper.kappa = std::exp(lk);
  out.hyper.zeta = std::exp(lz);
  if (lz == log_zeta) {
    out.value = 0.5 * quad / out.hyper.kappa + 0.5 * (n * lk + chol.log_det) + 0.5 * n * linalg::kLog2Pi;
    return out;
  }
  Eigen::MatrixXd c = out.hyper.kappa * r;
  c.diagonal().array() += out.hyper.zeta;
  linalg::JitteredCholesky cc;
  if (!linalg::try_jittered_cholesky(c, &cc)) return out;
  Eigen::VectorXd v = cc.llt.matrixL().solve(y);
  out.value = 0.5 * v.squaredNorm() + 0.5 * cc.log_det + 0.5 * n * linalg::kLog2Pi;
  return out;
}

}  // namespace

GpFitResult fit_component_report(const DesignMatrix& design, const Eigen::VectorXd& scores,
                                 const GpFitOptions& options) {
  if (design.rows() < 2) fail(ErrorKind::InvalidArgument, "GP fit needs at least 2 design points");
  if (design.rows() != scores.size()) fail(ErrorKind::InvalidArgument, "score length does not match design size");
  if (options.restarts < 1) fail(ErrorKind::InvalidArgument, "restarts must be at least 1");
  const GpBounds& b = options.bounds;
  const DistanceCache dist(design);

  optimize::Box box;
  box.lower.resize(kParamDim + 1);
  box.upper.resize(kParamDim + 1);
  box.lower.head(kParamDim).setConstant(b.log_phi_lo);
  box.upper.head(kParamDim).setConstant(b.log_phi_hi);
  box.lower[kParamDim] = b.log_zeta_lo - b.log_kappa_hi;
  box.upper[kParamDim] = b.log_zeta_hi - b.log_kappa_lo;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  optimize::NelderMeadOptions nm;
  nm.max_evaluations = options.max_evaluations;
  nm.f_tolerance = 1e-6;

  auto objective = [&](const Eigen::VectorXd& z) { return profile(dist, scores, z, b).value; };

  std::vector<GpStartReport> starts;
  Eigen::VectorXd best_x;
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < options.restarts; ++s) {
    Eigen::VectorXd z(kParamDim + 1);
    if (s == 0) {
      z.head(kParamDim).setConstant(std::log(0.5));
      z[kParamDim] = -4.0;
    } else {
      for (int k = 0; k < kParamDim; ++k) z[k] = -3.0 + 4.5 * u01(rng);
      z[kParamDim] = -10.0 + 10.0 * u01(rng);
    }
    z = box.clamp(z);
    auto res = optimize::nelder_mead(objective, z, box, nm);
    starts.push_back({z, res.value, res.evaluations, res.converged});
    if (res.value < best) {
      best = res.value;
      best_x = res.x;
    }
  }
  if (!std::isfinite(best)) {
    std::ostringstream msg;
    msg << "GP fit failed from every start:";
    for (const auto& s : starts) msg << " [start " << s.start.transpose() << " -> " << s.value << "]";
    fail(ErrorKind::Numeric, msg.str());
  }

  Profiled p = profile(dist, scores, best_x, b);
  GpComponentModel model(p.hyper, design, scores);
  const bool at_floor = std::log(p.hyper.kappa) <= b.log_kappa_lo + 1e-9;
  const bool null_scores = scores.cwiseAbs().maxCoeff() <= 1e-12;
  model.set_degenerate(at_floor || null_scores);
  return GpFitResult{std::move(model), std::move(starts)};
}

GpComponentModel fit_component(const DesignMatrix& design, const Eigen::VectorXd& scores,
                               const GpFitOptions& options) {
  return fit_component_report(design, scores, options).model;
}

Eigen::VectorXd EmulatorBank::fitted_kappas() const {
  Eigen::VectorXd k(size());
  for (Eigen::Index j = 0; j < size(); ++j) k[j] = components[static_cast<std::size_t>(j)].hyper().kappa;
  return k;
}

EmulatorBank fit_bank(const DesignMatrix& design, const Eigen::MatrixXd& scores, const GpFitOptions& options,
                      std::string channel, int threads) {
  if (scores.rows() != design.rows()) fail(ErrorKind::InvalidArgument, "score rows do not match design size");
  const Eigen::Index j_count = scores.cols();
  std::vector<std::optional<GpComponentModel>> slots(static_cast<std::size_t>(j_count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(j_count));
  std::atomic<Eigen::Index> next{0};

  auto worker = [&]() {
    for (Eigen::Index j = next++; j < j_count; j = next++) {
      try {
        GpFitOptions o = options;
        o.seed = options.seed + 7919ULL * static_cast<std::uint64_t>(j);
        slots[static_cast<std::size_t>(j)] = fit_component(design, scores.col(j), o);
      } catch (...) {
        errors[static_cast<std::size_t>(j)] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, static_cast<int>(std::max<Eigen::Index>(j_count, 1)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EmulatorBank bank;
  bank.channel = std::move(channel);
  for (auto& s : slots) bank.components.push_back(std::move(*s));
  return bank;
}

BankPrediction bank_predict(const EmulatorBank& bank, const Theta& theta, const Eigen::VectorXd* kappa_overrides) {
  if (kappa_overrides && kappa_overrides->size() != bank.size())
    fail(ErrorKind::InvalidArgument, "sill override length " + std::to_string(kappa_overrides->size()) +
                                         " does not match bank size " + std::to_string(bank.size()));
  BankPrediction out;
  out.mean.resize(bank.size());
  out.variance.resize(bank.size());
  for (Eigen::Index j = 0; j < bank.size(); ++j) {
    const auto& c = bank.components[static_cast<std::size_t>(j)];
    GpPrediction p = kappa_overrides ? c.predict(theta, (*kappa_overrides)[j]) : c.predict(theta);
    out.mean[j] = p.mean;
    out.variance[j] = p.variance;
  }
  return out;
}

// ---- leave-out experiments --------------------------------------------------

std::vector<Eigen::Index> central_holdout(const Design& design, Eigen::Index count) {
  if (count < 1 || count >= design.size()) fail(ErrorKind::InvalidArgument, "holdout must be a non-empty proper subset");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(design.size()));
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::VectorXd dist(design.size());
  for (Eigen::Index i = 0; i < design.size(); ++i)
    dist[i] = (design.points().row(i).array() - 0.5).matrix().squaredNorm();
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return dist[a] < dist[b]; });
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

constexpr double kZ90 = 1.6448536269514722;

std::vector<Eigen::Index> complement(Eigen::Index total, const std::vector<Eigen::Index>& holdout) {
  std::vector<bool> out(static_cast<std::size_t>(total), false);
  for (auto h : holdout) {
    if (h < 0 || h >= total) fail(ErrorKind::InvalidArgument, "holdout index out of range");
    out[static_cast<std::size_t>(h)] = true;
  }
  std::vector<Eigen::Index> train;
  for (Eigen::Index i = 0; i < total; ++i)
    if (!out[static_cast<std::size_t>(i)]) train.push_back(i);
  if (holdout.empty()) fail(ErrorKind::InvalidArgument, "holdout is empty");
  if (train.size() < 8)
    fail(ErrorKind::InvalidArgument, "holdout too large: only " + std::to_string(train.size()) +
                                         " training runs remain, at least 8 are required");
  return train;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

LooReport leave_out_experiment(const SeriesEnsemble& e, const std::vector<Eigen::Index>& holdout,
                               const LooOptions& options) {
  auto train = complement(e.runs(), holdout);
  Eigen::MatrixXd ytrain = rows_of(e.values(), train);
  DesignMatrix xtrain = e.design().subset(train).points();
  const Eigen::Index comps = std::min<Eigen::Index>(options.components, static_cast<Eigen::Index>(train.size()) - 1);
  PcaFit pca = fit_pca(ytrain, comps);
  EmulatorBank bank = fit_bank(xtrain, pca.scores.scores, options.gp, "series", options.threads);

  Eigen::MatrixXd fitted = (pca.scores.scores * pca.model.basis.transpose()).rowwise() + pca.model.mean.transpose();
  Eigen::VectorXd resid_var =
      (ytrain - fitted).colwise().squaredNorm().transpose() / static_cast<double>(ytrain.rows() - 1);
  Eigen::MatrixXd k2 = pca.model.basis.array().square().matrix();

  LooReport report;
  report.channel = "series";
  double sq = 0.0, base = 0.0, hits = 0.0, count = 0.0;
  for (auto h : holdout) {
    auto p = bank_predict(bank, e.design().points().row(h).transpose());
    Eigen::VectorXd mean = reconstruct(pca.model, p.mean);
    Eigen::VectorXd sd = (k2 * p.variance + resid_var).cwiseSqrt();
    Eigen::VectorXd err = e.values().row(h).transpose() - mean;
    Eigen::VectorXd naive = e.values().row(h).transpose() - pca.model.mean;
    const double n = static_cast<double>(err.size());
    double inside = (err.cwiseAbs().array() <= kZ90 * sd.array()).cast<double>().sum();
    report.runs.push_back({h, std::sqrt(err.squaredNorm() / n), inside / n});
    sq += err.squaredNorm();
    base += naive.squaredNorm();
    hits += inside;
    count += n;
  }
  report.rmse = std::sqrt(sq / count);
  report.standardized_rmse = base > 0.0 ? std::sqrt(sq / base) : 0.0;
  report.coverage = hits / count;
  return report;
}

LooReport leave_out_experiment(const BinaryEnsemble& e, const std::vector<Eigen::Index>& holdout,
                               const LooOptions& options) {
  auto train = complement(e.runs(), holdout);
  Eigen::MatrixXd ytrain = rows_of(e.values(), train);
  DesignMatrix xtrain = e.design().subset(train).points();
  LogisticPcaOptions lo;
  lo.max_iter = options.lpca_max_iter;
  lo.tol = options.lpca_tol;
  auto fit = fit_logistic_pca(ytrain, options.components, lo);
  const auto& model = fit.model;
  EmulatorBank bank = fit_bank(xtrain, model.scores, options.gp, "binary", options.threads);
  Eigen::MatrixXd k2 = model.basis.array().square().matrix();
  Eigen::VectorXd train_rate = ytrain.colwise().mean().transpose();

  LooReport report;
  report.channel = "binary";
  double sq = 0.0, base = 0.0, hits = 0.0, count = 0.0;
  for (auto h : holdout) {
    auto p = bank_predict(bank, e.design().points().row(h).transpose());
    Eigen::VectorXd gamma = logits(model, p.mean);
    Eigen::VectorXd prob = reconstruct(model, p.mean);
    Eigen::VectorXd sd = (k2 * p.variance).cwiseSqrt();
    Eigen::VectorXd y = e.values().row(h).transpose();
    Eigen::VectorXd err = y - prob;
    const double n = static_cast<double>(y.size());
    double inside = 0.0;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      bool ok = y[j] > 0.5 ? gamma[j] + kZ90 * sd[j] > 0.0 : gamma[j] - kZ90 * sd[j] < 0.0;
      inside += ok ? 1.0 : 0.0;
    }
    report.runs.push_back({h, std::sqrt(err.squaredNorm() / n), inside / n});
    sq += err.squaredNorm();
    base += (y - train_rate).squaredNorm();
    hits += inside;
    count += n;
  }
  report.rmse = std::sqrt(sq / count);
  report.standardized_rmse = base > 0.0 ? std::sqrt(sq / base) : 0.0;
  report.coverage = hits / count;
  return report;
}

void save_loo_report(const std::vector<LooReport>& reports, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "channel,run,rmse,coverage\n";
  for (const auto& r : reports) {
    for (const auto& run : r.runs)
      out << r.channel << ',' << run.run << ',' << csv::format(run.rmse) << ',' << csv::format(run.coverage) << '\n';
    out << r.channel << ",all," << csv::format(r.rmse) << ',' << csv::format(r.coverage) << '\n';
    out << r.channel << ",standardized_rmse," << csv::format(r.standardized_rmse) << ",\n";
  }
  csv::write_text(path, out.str());
}

// ---- persistence ------------------------------------------------------------

std::string design_hash(const DesignMatrix& design) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    for (int k = 0; k < kParamDim; ++k) {
      double v = design(i, k);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_gp(const GpComponentModel& model, const std::string& channel, Eigen::Index index,
             const std::filesystem::path& path) {
  nlohmann::json j;
  j["channel"] = channel;
  j["index"] = index;
  j["kappa"] = model.hyper().kappa;
  j["phi"] = model.hyper().phi;
  j["zeta"] = model.hyper().zeta;
  j["jitter"] = model.jitter();
  j["degenerate"] = model.degenerate();
  j["neg_log_likelihood"] = model.neg_log_likelihood();
  j["design_hash"] = design_hash(model.design());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.design().rows(); ++i) {
    std::array<double, kParamDim> r{};
    for (int k = 0; k < kParamDim; ++k) r[k] = model.design()(i, k);
    rows.push_back(r);
  }
  j["design"] = rows;
  j["train_scores"] = std::vector<double>(model.train_scores().data(),
                                          model.train_scores().data() + model.train_scores().size());
  csv::write_text(path, j.dump(1) + "\n");
}

GpComponentModel load_gp(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(path));
    GpHyperParams h;
    h.kappa = j.at("kappa").get<double>();
    h.phi = j.at("phi").get<std::array<double, kParamDim>>();
    h.zeta = j.at("zeta").get<double>();
    const auto& rows = j.at("design");
    DesignMatrix x(static_cast<Eigen::Index>(rows.size()), kParamDim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto r = rows[i].get<std::array<double, kParamDim>>();
      for (int k = 0; k < kParamDim; ++k) x(static_cast<Eigen::Index>(i), k) = r[k];
    }
    auto s = j.at("train_scores").get<std::vector<double>>();
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    if (design_hash(x) != j.at("design_hash").get<std::string>())
      fail(ErrorKind::Parse, path.string() + ": design hash mismatch");
    GpComponentModel model(h, std::move(x), std::move(y));
    model.set_degenerate(j.at("degenerate").get<bool>());
    return model;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Parse, path.string() + ": " + ex.what());
  }
}

void save_bank(const EmulatorBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (Eigen::Index j = 0; j < bank.size(); ++j)
    save_gp(bank.components[static_cast<std::size_t>(j)], bank.channel, j,
            dir / ("gp_" + bank.channel + "_" + std::to_string(j) + ".json"));
}

EmulatorBank load_bank(const std::filesystem::path& dir, const std::string& channel) {
  EmulatorBank bank;
  bank.channel = channel;
  for (Eigen::Index j = 0;; ++j) {
    auto p = dir / ("gp_" + channel + "_" + std::to_string(j) + ".json");
    if (!std::filesystem::exists(p)) break;
    bank.components.push_back(load_gp(p));
  }
  if (bank.components.empty())
    fail(ErrorKind::MissingArtifact, "emulator bank missing; run fit-emulator");
  return bank;
}

}  // namespace redcal
