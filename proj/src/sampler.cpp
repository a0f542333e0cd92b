#include "redcal/calibration.hpp"

#include "redcal/linalg.hpp"
#include "redcal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace redcal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Layout {
  Eigen::Index j1 = 0, j2 = 0, l = 1, me = 0;
  Eigen::Index theta = 0, psi = 0, kappa = 0, nu2 = 0, a2 = 0, a1 = 0, sig = 0, rho = 0, dim = 0;

  Layout(Eigen::Index j1_, Eigen::Index j2_, Eigen::Index l_, Eigen::Index me_) : j1(j1_), j2(j2_), l(l_), me(me_) {
    psi = theta + kParamDim;
    kappa = psi + j2;
    nu2 = kappa + j1;
    a2 = nu2 + l;
    a1 = a2 + 1;
    sig = a1 + 1;
    rho = sig + 1;
    dim = rho + me * l;
  }
};

struct ThetaMoments {
  Theta theta;
  BankPrediction psi;
  std::vector<GpComponentModel::ThetaCache> eta;
};

double log_logistic_slope(double x) { return -linalg::log1pexp(-x) - linalg::log1pexp(x); }

double logit_clamped(double u) {
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return std::log(u) - std::log1p(-u);
}

class Evaluator {
 public:
  Evaluator(const DataBundle& d, Mode mode, Layout layout) : d_(d), mode_(mode), lay_(layout) {}

  const Layout& layout() const { return lay_; }

  Theta theta_of(const Eigen::VectorXd& x) const {
    Theta th;
    for (int k = 0; k < kParamDim; ++k) {
      double lo = d_.prior.theta_lower[k], hi = d_.prior.theta_upper[k];
      th[k] = std::clamp(lo + (hi - lo) * linalg::logistic(x[lay_.theta + k]), lo, hi);
    }
    return th;
  }

  ThetaMoments moments(const Theta& th) const {
    ThetaMoments m;
    m.theta = th;
    m.psi = bank_predict(*d_.binary_bank, th);
    if (mode_ == Mode::Joint)
      for (const auto& c : d_.series_bank->components) m.eta.push_back(c.prepare(th));
    return m;
  }

  ChainState decode(const Eigen::VectorXd& x, const ThetaMoments& m) const {
    ChainState s;
    s.theta = m.theta;
    s.psi = m.psi.mean + m.psi.variance.cwiseSqrt().cwiseProduct(x.segment(lay_.psi, lay_.j2));
    s.kappa1 = x.segment(lay_.kappa, lay_.j1).array().exp();
    s.nu2 = x.segment(lay_.nu2, lay_.l);
    s.alpha2_sq = std::exp(x[lay_.a2]);
    s.alpha1_sq = std::exp(x[lay_.a1]);
    s.sigma_eps_sq = std::exp(x[lay_.sig]);
    s.r_nu.resize(lay_.me, lay_.l);
    for (Eigen::Index i = 0; i < lay_.me; ++i)
      for (Eigen::Index j = 0; j < lay_.l; ++j)
        s.r_nu(i, j) = 2.0 * linalg::logistic(x[lay_.rho + i * lay_.l + j]) - 1.0;
    return s;
  }

  Eigen::VectorXd encode(const ChainState& s, const ThetaMoments& m) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lay_.dim);
    for (int k = 0; k < kParamDim; ++k) {
      double lo = d_.prior.theta_lower[k], hi = d_.prior.theta_upper[k];
      x[lay_.theta + k] = logit_clamped((s.theta[k] - lo) / (hi - lo));
    }
    x.segment(lay_.psi, lay_.j2) = (s.psi - m.psi.mean).cwiseQuotient(m.psi.variance.cwiseSqrt());
    if (lay_.j1) x.segment(lay_.kappa, lay_.j1) = s.kappa1.array().log();
    x.segment(lay_.nu2, lay_.l) = s.nu2;
    x[lay_.a2] = std::log(s.alpha2_sq);
    x[lay_.a1] = std::log(s.alpha1_sq);
    x[lay_.sig] = std::log(s.sigma_eps_sq);
    for (Eigen::Index i = 0; i < lay_.me; ++i)
      for (Eigen::Index j = 0; j < lay_.l; ++j)
        x[lay_.rho + i * lay_.l + j] = logit_clamped(0.5 * (s.r_nu(i, j) + 1.0));
    return x;
  }

  double value(const Eigen::VectorXd& x, const ThetaMoments& m) const {
    const PriorConfig& pr = d_.prior;
    ChainState s = decode(x, m);
    double lp = 0.0;
    for (int k = 0; k < kParamDim; ++k)
      lp += log_logistic_slope(x[lay_.theta + k]);  // uniform density times Jacobian
    const auto xi = x.segment(lay_.psi, lay_.j2);
    lp += -0.5 * xi.squaredNorm() - 0.5 * static_cast<double>(lay_.j2) * linalg::kLog2Pi;
    lp += binary_log_likelihood(s, *d_.z2, *d_.lpca, *d_.bdisc);
    lp += -0.5 * (s.nu2.squaredNorm() / s.alpha2_sq + static_cast<double>(lay_.l) * (std::log(s.alpha2_sq) + linalg::kLog2Pi));
    lp += inverse_gamma_log_density(s.alpha2_sq, pr.variance_shape, pr.variance_scale) + x[lay_.a2];
    if (mode_ == Mode::Joint) {
      for (Eigen::Index j = 0; j < lay_.j1; ++j)
        lp += inverse_gamma_log_density(s.kappa1[j], pr.kappa_shape, pr.kappa_scale[j]) + x[lay_.kappa + j];
      lp += inverse_gamma_log_density(s.alpha1_sq, pr.variance_shape, pr.variance_scale) + x[lay_.a1];
      lp += inverse_gamma_log_density(s.sigma_eps_sq, pr.variance_shape, pr.variance_scale) + x[lay_.sig];
      for (Eigen::Index k = 0; k < lay_.me * lay_.l; ++k) lp += std::log(2.0) + log_logistic_slope(x[lay_.rho + k]);
      if (!std::isfinite(lp) || !s.correlations_valid()) return kNegInf;
      Eigen::VectorXd mu(lay_.j1), var(lay_.j1);
      for (Eigen::Index j = 0; j < lay_.j1; ++j) {
        auto p = d_.series_bank->components[static_cast<std::size_t>(j)].predict(m.eta[static_cast<std::size_t>(j)],
                                                                                  s.kappa1[j]);
        mu[j] = p.mean;
        var[j] = p.variance;
      }
      try {
        lp += series_log_likelihood(s, *d_.robs, mu, var);
      } catch (const Error&) {
        return kNegInf;
      }
    }
    return std::isfinite(lp) ? lp : kNegInf;
  }

 private:
  const DataBundle& d_;
  Mode mode_;
  Layout lay_;
};

struct BlockState {
  Block block;
  std::vector<Eigen::Index> coords;  ///< active coordinates only
  Eigen::MatrixXd chol;              ///< proposal shape
  double log_scale = 0.0;
  long proposed = 0, accepted = 0;        // post burn-in
  long adapt_steps = 0;
  std::vector<Eigen::VectorXd> history;  // samples for the covariance update
};

}  // namespace

std::string block_name(Block b) {
  switch (b) {
    case Block::Theta: return "theta";
    case Block::Psi: return "psi";
    case Block::Kappa: return "kappa1";
    case Block::Nu2: return "nu2_alpha2";
    case Block::Variances: return "alpha1_sigma";
    case Block::Correlation: return "r_nu";
  }
  return "unknown";
}

std::vector<std::string> state_names(Eigen::Index j1, Eigen::Index j2, Eigen::Index l, Eigen::Index m_eff) {
  std::vector<std::string> n;
  for (int k = 0; k < kParamDim; ++k) n.push_back("theta" + std::to_string(k + 1));
  for (Eigen::Index j = 0; j < j2; ++j) n.push_back("psi_" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < j1; ++j) n.push_back("kappa1_" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < l; ++j) n.push_back("nu2_" + std::to_string(j + 1));
  n.push_back("alpha1_sq");
  n.push_back("alpha2_sq");
  n.push_back("sigma_eps_sq");
  for (Eigen::Index i = 0; i < m_eff; ++i)
    for (Eigen::Index j = 0; j < l; ++j) n.push_back("rho_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  return n;
}

Eigen::VectorXd flatten(const ChainState& s) {
  const Eigen::Index j2 = s.psi.size(), j1 = s.kappa1.size(), l = s.nu2.size(), me = s.r_nu.rows();
  Eigen::VectorXd v(kParamDim + j2 + j1 + l + 3 + me * l);
  Eigen::Index k = 0;
  v.segment(k, kParamDim) = s.theta;
  k += kParamDim;
  v.segment(k, j2) = s.psi;
  k += j2;
  v.segment(k, j1) = s.kappa1;
  k += j1;
  v.segment(k, l) = s.nu2;
  k += l;
  v[k++] = s.alpha1_sq;
  v[k++] = s.alpha2_sq;
  v[k++] = s.sigma_eps_sq;
  for (Eigen::Index i = 0; i < me; ++i)
    for (Eigen::Index j = 0; j < l; ++j) v[k++] = s.r_nu(i, j);
  return v;
}

Eigen::Index PosteriorChain::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorKind::InvalidArgument, "chain has no column '" + name + "'");
  return static_cast<Eigen::Index>(it - names.begin());
}

ChainState PosteriorChain::state(Eigen::Index row) const {
  const Eigen::VectorXd v = samples.row(row).transpose();
  ChainState s;
  Eigen::Index k = 0;
  s.theta = v.segment<kParamDim>(k);
  k += kParamDim;
  s.psi = v.segment(k, j2);
  k += j2;
  s.kappa1 = v.segment(k, j1);
  k += j1;
  s.nu2 = v.segment(k, l);
  k += l;
  s.alpha1_sq = v[k++];
  s.alpha2_sq = v[k++];
  s.sigma_eps_sq = v[k++];
  s.r_nu.resize(m_eff, l);
  for (Eigen::Index i = 0; i < m_eff; ++i)
    for (Eigen::Index j = 0; j < l; ++j) s.r_nu(i, j) = v[k++];
  return s;
}

double sampler_log_target(const ChainState& s, const DataBundle& d, Mode mode) {
  double lp = log_posterior(s, d, mode);
  if (!std::isfinite(lp)) return kNegInf;
  const PriorConfig& pr = d.prior;
  for (int k = 0; k < kParamDim; ++k) {
    double lo = pr.theta_lower[k], hi = pr.theta_upper[k];
    lp += std::log((s.theta[k] - lo) * (hi - s.theta[k]) / (hi - lo));
  }
  lp += 0.5 * bank_predict(*d.binary_bank, s.theta).variance.array().log().sum();
  lp += std::log(s.alpha2_sq);
  if (mode == Mode::Joint) {
    lp += s.kappa1.array().log().sum() + std::log(s.alpha1_sq) + std::log(s.sigma_eps_sq);
    lp += (0.5 * (1.0 - s.r_nu.array().square())).log().sum();
  }
  return lp;
}

PosteriorChain run_mcmc(const ChainState& init, const DataBundle& d, Mode mode, const McmcOptions& options) {
  d.validate(mode);
  init.validate();
  if (options.iterations < 1) fail(ErrorKind::InvalidArgument, "iterations must be positive");
  if (options.thin < 1) fail(ErrorKind::InvalidArgument, "thinning must be at least 1");
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0))
    fail(ErrorKind::InvalidArgument, "burn-in fraction must lie in [0, 1)");

  if (!std::isfinite(log_posterior(init, d, mode)))
    fail(ErrorKind::InvalidArgument, "log posterior is not finite at the initial state");

  const bool joint = mode == Mode::Joint;
  const Eigen::Index j1 = joint ? init.kappa1.size() : 0;
  const Eigen::Index me = joint ? init.r_nu.rows() : 0;
  ChainState start = init;
  if (!joint) {
    start.kappa1.resize(0);
    start.r_nu.resize(0, init.nu2.size());
  }
  Layout lay(j1, start.psi.size(), start.nu2.size(), me);
  Evaluator ev(d, mode, lay);

  ThetaMoments cur_m = ev.moments(start.theta);
  Eigen::VectorXd x = ev.encode(start, cur_m);
  cur_m = ev.moments(ev.theta_of(x));
  double cur = ev.value(x, cur_m);
  if (!std::isfinite(cur)) fail(ErrorKind::InvalidArgument, "log posterior is not finite at the initial state");

  // Blocks and their initial diagonal proposal scales.
  const ProposalScales& sc = options.scales;
  std::vector<BlockState> blocks;
  std::vector<std::string> frozen;
  auto add_block = [&](Block b, std::vector<std::pair<Eigen::Index, double>> coords) {
    BlockState bs;
    bs.block = b;
    std::vector<double> scales;
    for (auto [i, s] : coords)
      if (s > 0.0) {
        bs.coords.push_back(i);
        scales.push_back(s);
      }
    if (bs.coords.empty()) {
      frozen.push_back(block_name(b));
      return;
    }
    Eigen::Map<Eigen::VectorXd> v(scales.data(), static_cast<Eigen::Index>(scales.size()));
    bs.chol = v.asDiagonal();
    blocks.push_back(std::move(bs));
  };
  auto range = [](Eigen::Index from, Eigen::Index count, double s) {
    std::vector<std::pair<Eigen::Index, double>> v;
    for (Eigen::Index i = 0; i < count; ++i) v.emplace_back(from + i, s);
    return v;
  };
  add_block(Block::Theta, range(lay.theta, kParamDim, sc.theta));
  add_block(Block::Psi, range(lay.psi, lay.j2, sc.psi));
  if (joint) add_block(Block::Kappa, range(lay.kappa, lay.j1, sc.kappa));
  {
    auto v = range(lay.nu2, lay.l, sc.nu2);
    v.emplace_back(lay.a2, sc.alpha2);
    add_block(Block::Nu2, v);
  }
  if (joint) {
    add_block(Block::Variances, {{lay.a1, sc.alpha1}, {lay.sig, sc.sigma}});
    add_block(Block::Correlation, range(lay.rho, lay.me * lay.l, sc.r));
  }

  const long burn = static_cast<long>(std::llround(options.burn_in_fraction * static_cast<double>(options.iterations)));
  const long total = burn + options.iterations;
  const long cov_from = burn / 4, cov_at = burn / 2;

  PosteriorChain chain;
  chain.j1 = j1;
  chain.j2 = lay.j2;
  chain.l = lay.l;
  chain.m_eff = me;
  chain.names = state_names(j1, lay.j2, lay.l, me);
  const long stored = options.iterations / options.thin;
  chain.samples.resize(stored, static_cast<Eigen::Index>(chain.names.size()));
  chain.log_post.resize(stored);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  long row = 0;
  for (long it = 0; it < total; ++it) {
    const bool burning = it < burn;
    for (auto& b : blocks) {
      const Eigen::Index bd = static_cast<Eigen::Index>(b.coords.size());
      Eigen::VectorXd z(bd);
      for (Eigen::Index k = 0; k < bd; ++k) z[k] = normal(rng);
      Eigen::VectorXd step = std::exp(b.log_scale) * (b.chol * z);
      Eigen::VectorXd y = x;
      for (Eigen::Index k = 0; k < bd; ++k) y[b.coords[static_cast<std::size_t>(k)]] += step[k];

      ThetaMoments prop_m;
      const bool moves_theta = b.block == Block::Theta;
      if (moves_theta) prop_m = ev.moments(ev.theta_of(y));
      const double prop = ev.value(y, moves_theta ? prop_m : cur_m);
      const double log_u = std::log(1.0 - unif(rng));
      const bool accept = log_u <= prop - cur;
      if (options.log_proposals) chain.proposals.push_back({b.block, it, cur, prop, log_u, accept});
      if (accept) {
        x = std::move(y);
        cur = prop;
        if (moves_theta) cur_m = std::move(prop_m);
      }
      if (burning) {
        if (options.adapt) {
          ++b.adapt_steps;
          double gain = std::min(0.5, 2.0 / std::sqrt(static_cast<double>(b.adapt_steps)));
          b.log_scale += gain * ((accept ? 1.0 : 0.0) - 0.3);
          b.log_scale = std::clamp(b.log_scale, -15.0, 8.0);
          if (it >= cov_from && it < cov_at) {
            Eigen::VectorXd v(bd);
            for (Eigen::Index k = 0; k < bd; ++k) v[k] = x[b.coords[static_cast<std::size_t>(k)]];
            b.history.push_back(std::move(v));
          }
        }
      } else {
        ++b.proposed;
        if (accept) ++b.accepted;
      }
    }

    if (options.adapt && it + 1 == cov_at && cov_at - cov_from >= 20) {
      for (auto& b : blocks) {
        const Eigen::Index bd = static_cast<Eigen::Index>(b.coords.size());
        const double h = static_cast<double>(b.history.size());
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(bd);
        for (const auto& v : b.history) mean += v;
        mean /= h;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(bd, bd);
        for (const auto& v : b.history) cov += (v - mean) * (v - mean).transpose();
        cov /= std::max(1.0, h - 1.0);
        if (bd > 12) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
        // Coordinates that never moved keep a fraction of their current spread.
        Eigen::VectorXd prev = (b.chol * b.chol.transpose()).diagonal() * std::exp(2.0 * b.log_scale);
        for (Eigen::Index k = 0; k < bd; ++k) cov(k, k) = std::max(cov(k, k), 1e-4 * prev[k]) + 1e-12;
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) {
          b.chol = llt.matrixL();
          b.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(bd)));
        }
        b.history.clear();
        b.adapt_steps = 0;
      }
    }

    if (!burning && (it - burn) % options.thin == options.thin - 1 && row < stored) {
      ChainState s = ev.decode(x, cur_m);
      chain.samples.row(row) = flatten(s).transpose();
      chain.log_post[row] = cur;
      ++row;
    }
  }

  for (const auto& name : frozen) chain.acceptance[name] = 1.0;
  for (const auto& b : blocks) {
    double rate = b.proposed ? static_cast<double>(b.accepted) / static_cast<double>(b.proposed) : 0.0;
    chain.acceptance[block_name(b.block)] = rate;
    if (b.proposed && b.accepted == 0)
      chain.warnings.push_back("block " + block_name(b.block) + " accepted no proposals after adaptation");
  }
  return chain;
}

std::vector<StabilityEntry> half_chain_stability(const PosteriorChain& chain, double threshold) {
  if (chain.size() < 100) fail(ErrorKind::InvalidArgument, "half-chain stability needs at least 100 stored states");
  std::vector<StabilityEntry> out;
  const Eigen::Index n = chain.size(), half = n / 2;
  for (Eigen::Index c = 0; c < chain.samples.cols(); ++c) {
    std::vector<double> all(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = chain.samples(i, c);
    std::span<const double> first(all.data(), static_cast<std::size_t>(half));
    double ks = stats::ks_distance(first, all);
    out.push_back({chain.names[static_cast<std::size_t>(c)], ks, ks < threshold});
  }
  return out;
}

ChainDiagnostics diagnose(const PosteriorChain& chain) {
  ChainDiagnostics d;
  d.acceptance = chain.acceptance;
  d.names = chain.names;
  d.warnings = chain.warnings;
  for (Eigen::Index c = 0; c < chain.samples.cols(); ++c) {
    std::vector<double> col(chain.samples.col(c).data(), chain.samples.col(c).data() + chain.size());
    d.mcse.push_back(chain.size() >= 8 ? stats::batch_means_mcse(col) : std::numeric_limits<double>::quiet_NaN());
  }
  if (chain.size() >= 100) {
    d.stability = half_chain_stability(chain);
    for (const auto& s : d.stability)
      if (!s.pass) d.warnings.push_back("half-chain KS " + std::to_string(s.ks) + " for " + s.name + " exceeds 0.1");
  }
  return d;
}

}  // namespace redcal
