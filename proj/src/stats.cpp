#include "redcal/stats.hpp"

#include "redcal/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace redcal::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double quantile(std::span<const double> x, double prob) {
  if (x.empty()) fail(ErrorKind::InvalidArgument, "quantile of an empty sample");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> quantiles(std::span<const double> x, std::span<const double> probs) {
  if (x.empty()) fail(ErrorKind::InvalidArgument, "quantile of an empty sample");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  for (double p : probs) {
    double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    out.push_back(sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
  }
  return out;
}

double batch_means_mcse(std::span<const double> x, int batches) {
  const auto n = x.size();
  if (batches <= 0) batches = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  if (batches < 2 || n < 2 * static_cast<std::size_t>(batches))
    fail(ErrorKind::InvalidArgument, "batch means needs at least 2 samples per batch and 2 batches (got " +
                                         std::to_string(n) + " samples, " + std::to_string(batches) + " batches)");
  const std::size_t size = n / static_cast<std::size_t>(batches);
  std::vector<double> means(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b)
    means[static_cast<std::size_t>(b)] = mean(x.subspan(static_cast<std::size_t>(b) * size, size));
  return sd(means) / std::sqrt(static_cast<double>(batches));
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  while (i < sa.size() && j < sb.size()) {
    double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

double silverman_bandwidth(std::span<const double> x) {
  double s = sd(x);
  double iqr = x.size() > 1 ? quantile(x, 0.75) - quantile(x, 0.25) : 0.0;
  double spread = std::min(s, iqr / 1.34);
  if (!(spread > 0.0)) spread = s > 0.0 ? s : 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(std::max<std::size_t>(x.size(), 1)), -0.2);
}

DensityGrid kernel_density(std::span<const double> x, int points) {
  DensityGrid grid;
  if (x.empty() || points < 2) return grid;
  const double h = silverman_bandwidth(x);
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double lo = *mn - 3.0 * h, hi = *mx + 3.0 * h;
  const double norm = 1.0 / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * M_PI));
  for (int k = 0; k < points; ++k) {
    double at = lo + (hi - lo) * k / (points - 1);
    double acc = 0.0;
    for (double v : x) {
      double u = (at - v) / h;
      acc += std::exp(-0.5 * u * u);
    }
    grid.x.push_back(at);
    grid.density.push_back(acc * norm);
  }
  return grid;
}

Summary summarize(std::span<const double> x) {
  Summary s;
  if (x.empty()) return s;
  s.mean = mean(x);
  s.sd = sd(x);
  const double probs[] = {0.025, 0.5, 0.975};
  auto q = quantiles(x, probs);
  s.q025 = q[0];
  s.q50 = q[1];
  s.q975 = q[2];
  return s;
}

}  // namespace redcal::stats
