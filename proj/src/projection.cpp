#include "redcal/projection.hpp"

#include "redcal/csv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace redcal {

GpPrediction ProjectionEmulator::predict(const Theta& theta) const {
  GpPrediction p = model.predict(theta);
  p.mean += offset;
  return p;
}

ProjectionEmulator fit_projection_emulator(const ScalarResponseSet& r, const GpFitOptions& options) {
  if (r.values.size() != r.design.size()) fail(ErrorKind::InvalidArgument, "response length does not match the design");
  if (!r.values.allFinite()) fail(ErrorKind::InvalidArgument, "responses must be finite");
  const double offset = r.values.mean();
  Eigen::VectorXd centred = r.values.array() - offset;
  return ProjectionEmulator{fit_component(r.design.points(), centred, options), offset};
}

TrajectoryEmulator fit_trajectory_emulator(const TrajectoryResponseSet& r, Eigen::Index components,
                                           const GpFitOptions& options, int threads) {
  if (r.values.rows() != r.design.size() || r.values.cols() != r.times.size())
    fail(ErrorKind::InvalidArgument, "trajectory matrix does not match design and times");
  TrajectoryEmulator t;
  t.times = r.times;
  PcaFit fit = fit_pca(r.values, components);
  t.pca = fit.model;
  t.bank = fit_bank(r.design.points(), fit.scores.scores, options, "trajectory", threads);
  return t;
}

PredictiveSample summarize_sample(std::vector<double> values) {
  PredictiveSample s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  s.summary = stats::summarize(s.values);
  s.density = stats::kernel_density(s.values);
  double neg = 0.0;
  for (double v : s.values) neg += v < 0.0 ? 1.0 : 0.0;
  s.prob_negative = neg / static_cast<double>(s.values.size());
  return s;
}

namespace {

std::vector<double> push_through(const Eigen::MatrixXd& thetas, const ProjectionEmulator& model, std::uint64_t seed,
                                 bool mean_only) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(thetas.rows()));
  for (Eigen::Index i = 0; i < thetas.rows(); ++i) {
    auto p = model.predict(thetas.row(i).transpose());
    double z = normal(rng);
    out.push_back(mean_only ? p.mean : p.mean + std::sqrt(p.variance) * z);
  }
  return out;
}

}  // namespace

PredictiveSample chain_to_predictive(const Eigen::MatrixXd& thetas, const ProjectionEmulator& model,
                                     std::uint64_t seed, bool mean_only) {
  if (thetas.rows() == 0) fail(ErrorKind::InvalidArgument, "chain is empty");
  if (thetas.cols() != kParamDim) fail(ErrorKind::InvalidArgument, "chain parameter block must have 4 columns");
  return summarize_sample(push_through(thetas, model, seed, mean_only));
}

PredictiveSample prior_predictive(const ProjectionEmulator& model, Eigen::Index draws, std::uint64_t seed,
                                  bool mean_only) {
  if (draws < 1) fail(ErrorKind::InvalidArgument, "prior predictive needs at least one draw");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd thetas(draws, kParamDim);
  for (Eigen::Index i = 0; i < draws; ++i)
    for (int k = 0; k < kParamDim; ++k) thetas(i, k) = u(rng);
  return summarize_sample(push_through(thetas, model, seed ^ 0x9e3779b97f4a7c15ULL, mean_only));
}

double Envelope::width_at(double t) const {
  if (times.size() == 0) fail(ErrorKind::InvalidArgument, "envelope is empty");
  Eigen::Index best = 0;
  (times.array() - t).abs().minCoeff(&best);
  return hi95[best] - lo95[best];
}

Envelope trajectory_envelope(const Eigen::MatrixXd& thetas, const TrajectoryEmulator& model, std::uint64_t seed,
                             bool mean_only) {
  if (thetas.rows() == 0) fail(ErrorKind::InvalidArgument, "chain is empty");
  const Eigen::Index n = thetas.rows(), t_count = model.times.size(), j = model.bank.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd scores(j, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto p = bank_predict(model.bank, thetas.row(i).transpose());
    for (Eigen::Index k = 0; k < j; ++k) {
      double z = normal(rng);
      scores(k, i) = mean_only ? p.mean[k] : p.mean[k] + std::sqrt(p.variance[k]) * z;
    }
  }
  Eigen::MatrixXd traj = (model.pca.basis * scores).colwise() + model.pca.mean;  // T x n

  Envelope e;
  e.times = model.times;
  e.mean.resize(t_count);
  e.lo95.resize(t_count);
  e.median.resize(t_count);
  e.hi95.resize(t_count);
  std::vector<double> row(static_cast<std::size_t>(n));
  const std::vector<double> probs{0.025, 0.5, 0.975};
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = traj(t, i);
    auto q = stats::quantiles(row, probs);
    e.mean[t] = traj.row(t).mean();
    e.lo95[t] = q[0];
    e.median[t] = q[1];
    e.hi95[t] = q[2];
  }
  return e;
}

void save_projection_sample(const PredictiveSample& s, const std::filesystem::path& path) {
  Eigen::Map<const Eigen::VectorXd> v(s.values.data(), static_cast<Eigen::Index>(s.values.size()));
  csv::write_matrix(path, {"delta_volume"}, v);
}

void save_projection_summary(const PredictiveSample& posterior, const PredictiveSample& prior,
                             const std::filesystem::path& path) {
  std::ostringstream out;
  out << "source,mean,sd,q025,q50,q975,prob_negative,draws\n";
  auto line = [&](const char* name, const PredictiveSample& s) {
    out << name << ',' << csv::format(s.summary.mean) << ',' << csv::format(s.summary.sd) << ','
        << csv::format(s.summary.q025) << ',' << csv::format(s.summary.q50) << ',' << csv::format(s.summary.q975) << ','
        << csv::format(s.prob_negative) << ',' << s.values.size() << '\n';
  };
  line("posterior", posterior);
  line("prior", prior);
  csv::write_text(path, out.str());
}

void save_envelope(const Envelope& e, const std::filesystem::path& path) {
  Eigen::MatrixXd m(e.times.size(), 4);
  m << e.times, e.mean, e.lo95, e.hi95;
  csv::write_matrix(path, {"time", "mean", "lo95", "hi95"}, m);
}

Envelope load_envelope(const std::filesystem::path& path) {
  std::vector<std::string> header;
  Eigen::MatrixXd m = csv::read_matrix(path, &header);
  if (m.cols() != 4) fail(ErrorKind::Parse, path.string() + ": expected columns time,mean,lo95,hi95");
  Envelope e;
  e.times = m.col(0);
  e.mean = m.col(1);
  e.lo95 = m.col(2);
  e.hi95 = m.col(3);
  e.median = e.mean;
  return e;
}

}  // namespace redcal
