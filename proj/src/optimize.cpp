#include "redcal/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace redcal::optimize {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd start,
                             const Box& box, const NelderMeadOptions& options) {
  const Eigen::Index d = start.size();
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> values;
  start = box.clamp(start);
  simplex.push_back(start);
  values.push_back(eval(start));
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd x = start;
    double step = options.initial_step;
    // Step away from the nearer bound so the vertex stays distinct after clamping.
    if (x[i] + step > box.upper[i]) step = -step;
    x[i] += step;
    x = box.clamp(x);
    simplex.push_back(x);
    values.push_back(eval(x));
  }

  std::vector<std::size_t> order(simplex.size());
  bool converged = false;
  while (evals < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double spread = std::abs(values[worst] - values[best]);
    double diameter = 0.0;
    for (std::size_t k = 1; k < order.size(); ++k)
      diameter = std::max(diameter, (simplex[order[k]] - simplex[best]).cwiseAbs().maxCoeff());
    if (std::isfinite(values[worst]) && spread <= options.f_tolerance && diameter <= 1e-3) {
      converged = true;
      break;
    }
    if (diameter <= options.x_tolerance) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += simplex[order[k]];
    centroid /= static_cast<double>(d);

    Eigen::VectorXd reflected = box.clamp(centroid + (centroid - simplex[worst]));
    double fr = eval(reflected);
    if (fr < values[best]) {
      Eigen::VectorXd expanded = box.clamp(centroid + 2.0 * (centroid - simplex[worst]));
      double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    bool outside = fr < values[worst];
    Eigen::VectorXd contracted =
        outside ? box.clamp(centroid + 0.5 * (reflected - centroid)) : box.clamp(centroid + 0.5 * (simplex[worst] - centroid));
    double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t k = 1; k < order.size(); ++k) {
      auto& x = simplex[order[k]];
      x = box.clamp(simplex[best] + 0.5 * (x - simplex[best]));
      values[order[k]] = eval(x);
    }
  }

  auto it = std::min_element(values.begin(), values.end());
  NelderMeadResult result;
  result.x = simplex[static_cast<std::size_t>(it - values.begin())];
  result.value = *it;
  result.evaluations = evals;
  result.converged = converged;
  return result;
}

}  // namespace redcal::optimize
