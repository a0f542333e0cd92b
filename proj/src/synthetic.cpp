#include "redcal/synthetic.hpp"

#include "redcal/discrepancy.hpp"
#include "redcal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace redcal::synthetic {

namespace {

constexpr double kVolA = 0.004;
constexpr double kVolB = 0.5;
constexpr double kVolC1 = 1.2;
constexpr double kVolC2 = 2.0;

void check_theta(const Theta& theta) {
  if (!ParameterPoint::in_unit_cube(theta)) fail(ErrorKind::InvalidArgument, "parameter point outside [0,1]^4");
}

}  // namespace

void SyntheticConfig::validate() const {
  if (grid_rows < 1 || grid_cols < 1) fail(ErrorKind::InvalidArgument, "grid dimensions must be positive");
  if (!(time_step > 0.0) || !(time_end > time_start)) fail(ErrorKind::InvalidArgument, "invalid hindcast time grid");
  if (!(forecast_step > 0.0) || !(forecast_end >= forecast_step))
    fail(ErrorKind::InvalidArgument, "invalid forecast time grid");
  if (design_levels < 2) fail(ErrorKind::InvalidArgument, "design needs at least 2 levels per parameter");
  if (!ParameterPoint::in_unit_cube(truth) || !ParameterPoint::in_unit_cube(theta_obs))
    fail(ErrorKind::InvalidArgument, "truth and reference parameters must lie in [0,1]^4");
  if (discrepancy_sill < 0.0 || !(discrepancy_range > 0.0))
    fail(ErrorKind::InvalidArgument, "discrepancy sill must be non-negative and range positive");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) fail(ErrorKind::InvalidArgument, "keep fraction must lie in (0, 1]");
}

Eigen::VectorXd time_grid(double start, double end, double step) {
  auto n = static_cast<Eigen::Index>(std::llround((end - start) / step)) + 1;
  if (n < 2) fail(ErrorKind::InvalidArgument, "time grid needs at least 2 points");
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) t[i] = start + step * static_cast<double>(i);
  return t;
}

Eigen::VectorXd hindcast_times(const SyntheticConfig& c) { return time_grid(c.time_start, c.time_end, c.time_step); }

Eigen::VectorXd forecast_times(const SyntheticConfig& c) {
  return time_grid(c.forecast_step, c.forecast_end, c.forecast_step);
}

Design factorial_design(int levels) {
  if (levels < 2) fail(ErrorKind::InvalidArgument, "design needs at least 2 levels per parameter");
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(levels, 0.0, 1.0);
  const Eigen::Index p = static_cast<Eigen::Index>(std::pow(levels, kParamDim));
  DesignMatrix x(p, kParamDim);
  for (Eigen::Index r = 0; r < p; ++r) {
    Eigen::Index rest = r;
    for (int k = kParamDim - 1; k >= 0; --k) {
      x(r, k) = v[rest % levels];
      rest /= levels;
    }
  }
  return Design(std::move(x));
}

double forward_series_at(const Theta& th, double t) {
  const double at = std::abs(t);
  const double retreat = 300.0 + 300.0 * th[0] + 150.0 * th[1];
  const double t_mid = 4000.0 + 8000.0 * th[3] * (1.0 - 0.5 * th[0]);
  const double s = 500.0 + 2500.0 * th[2];
  const double bump = 120.0 * std::max(0.0, th[2] - 0.5) * (1.0 - th[1]);
  const double dt = at - 3000.0;
  return 600.0 - retreat * linalg::logistic((t_mid - at) / s) + bump * std::exp(-dt * dt / (2.0 * 1500.0 * 1500.0));
}

Eigen::VectorXd forward_series(const Theta& theta, const Eigen::VectorXd& times) {
  check_theta(theta);
  Eigen::VectorXd g(times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) g[i] = forward_series_at(theta, times[i]);
  return g;
}

Eigen::VectorXd elliptic_distance(const Grid& grid, double anisotropy) {
  const double rc = 0.5 * (grid.rows() - 1), cc = 0.5 * (grid.cols() - 1);
  const double rh = std::max(rc, 0.5), ch = std::max(cc, 0.5);
  Eigen::VectorXd d(grid.active());
  for (Eigen::Index k = 0; k < grid.active(); ++k) {
    auto [i, j] = grid.cells()[static_cast<std::size_t>(k)];
    double dr = (i - rc) / rh;
    double dc = anisotropy * (j - cc) / ch;
    d[k] = std::sqrt(dr * dr + dc * dc);
  }
  return d;
}

double footprint_radius(const Theta& th) { return 0.35 + 0.4 * (1.0 - th[0]) * (1.0 - 0.5 * th[1]); }

BinaryField forward_binary(const Theta& theta, const Grid& grid) {
  check_theta(theta);
  BinaryField f;
  f.thickness = footprint_radius(theta) - elliptic_distance(grid, 1.0 + 0.5 * theta[2]).array();
  f.mask = (f.thickness.array() > 0.0).cast<double>();
  return f;
}

double forecast_change(const Theta& th, double t) {
  if (t <= 0.0) return 0.0;
  const double gain = kVolC1 * th[0] * (1.0 + th[1]) * (1.0 - std::exp(-t / 1500.0));
  const double regrowth =
      kVolC2 * std::max(0.0, th[2] - 0.7) * std::max(0.0, 0.3 - th[3]) * (1.0 - std::exp(-t / 2000.0));
  return gain - regrowth;
}

VolumeOutput forward_volume(const Theta& theta, const Eigen::VectorXd& hindcast, const Eigen::VectorXd& forecast) {
  check_theta(theta);
  VolumeOutput out;
  out.times.resize(hindcast.size() + forecast.size());
  out.times << hindcast, forecast;
  out.trajectory.resize(out.times.size());
  const double g0 = forward_series_at(theta, 0.0);
  for (Eigen::Index i = 0; i < out.times.size(); ++i) {
    double t = out.times[i];
    if (t <= 0.0)
      out.trajectory[i] = kVolA * (forward_series_at(theta, t) - g0) +
                          kVolB * (1.0 - theta[2]) * linalg::logistic((-t - 9000.0) / 800.0);
    else
      out.trajectory[i] = forecast_change(theta, t);
  }
  out.change_500 = forecast_change(theta, 500.0);
  return out;
}

SyntheticEnsemble generate_ensemble(const SyntheticConfig& c, int threads) {
  c.validate();
  SyntheticEnsemble e;
  e.design = factorial_design(c.design_levels);
  const Eigen::VectorXd times = hindcast_times(c);
  const Eigen::VectorXd future = forecast_times(c);
  const Grid grid(c.grid_rows, c.grid_cols);
  const Eigen::Index p = e.design.size();
  const Eigen::Index m = grid.active();

  Eigen::MatrixXd series(p, times.size()), mask(p, m), thick(p, m), traj(p, times.size() + future.size());
  Eigen::VectorXd volume(p);
  auto fill = [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      Theta th = e.design.points().row(i).transpose();
      series.row(i) = forward_series(th, times).transpose();
      auto b = forward_binary(th, grid);
      mask.row(i) = b.mask.transpose();
      thick.row(i) = b.thickness.transpose();
      auto v = forward_volume(th, times, future);
      traj.row(i) = v.trajectory.transpose();
      volume[i] = v.change_500;
    }
  };
  const int n_threads = std::clamp(threads, 1, static_cast<int>(p));
  if (n_threads == 1) {
    fill(0, p);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(fill, p * t / n_threads, p * (t + 1) / n_threads);
    for (auto& t : pool) t.join();
  }
  e.series = SeriesEnsemble(std::move(series), times, e.design);
  e.binary = BinaryEnsemble(std::move(mask), grid, e.design);
  e.thickness = std::move(thick);
  e.volume = std::move(volume);
  e.trajectory_times.resize(times.size() + future.size());
  e.trajectory_times << times, future;
  e.trajectory = std::move(traj);
  return e;
}

SimulatedObservations make_simulated_observations(const Theta& truth, const SyntheticConfig& c,
                                                  const SyntheticEnsemble& ensemble, std::uint64_t seed) {
  c.validate();
  check_theta(truth);
  const Grid& grid = ensemble.binary.grid();
  SimulatedObservations o;
  o.truth = truth;
  const Eigen::VectorXd& times = ensemble.series.times();
  o.series_discrepancy = simulate_series_discrepancy(times, c.discrepancy_sill, c.discrepancy_range, seed);
  o.series.values = forward_series(truth, times) + o.series_discrepancy;

  Eigen::VectorXd reference = forward_binary(c.theta_obs, grid).thickness;
  o.thickness_discrepancy = common_binary_discrepancy(ensemble.thickness, reference, c.keep_fraction);
  Eigen::VectorXd h = forward_binary(truth, grid).thickness - o.thickness_discrepancy;
  o.binary.values = (h.array() > 0.0).cast<double>();
  o.true_change = forecast_change(truth, 500.0);
  return o;
}

}  // namespace redcal::synthetic
