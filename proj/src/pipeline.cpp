#include "redcal/pipeline.hpp"

#include "redcal/csv.hpp"
#include "redcal/ensemble_store.hpp"
#include "redcal/stats.hpp"
#include "redcal/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

namespace redcal::pipeline {

namespace {

using nlohmann::json;

void require_file(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) fail(ErrorKind::MissingArtifact, p.string() + " missing; run " + producer);
}

GpFitOptions gp_options(const RunConfig& c) {
  GpFitOptions o;
  o.restarts = c.restarts;
  o.max_evaluations = c.max_evaluations;
  o.seed = c.seed;
  return o;
}

void write_indices(const std::vector<Eigen::Index>& idx, const fs::path& path) {
  std::ostringstream out;
  out << "run\n";
  for (auto i : idx) out << i << '\n';
  csv::write_text(path, out.str());
}

std::vector<Eigen::Index> read_indices(const fs::path& path) {
  auto rows = csv::read(path);
  std::vector<Eigen::Index> idx;
  for (std::size_t r = 1; r < rows.size(); ++r)
    idx.push_back(static_cast<Eigen::Index>(csv::parse_double(rows[r].at(0), path.string())));
  return idx;
}

struct Loaded {
  Design design;
  SeriesEnsemble series;
  BinaryEnsemble binary;
};

Loaded load_ensembles(const fs::path& run) {
  require_file(run / "design.csv", "simulate");
  require_file(run / "series.csv", "simulate");
  require_file(run / "binary.csv", "simulate");
  Loaded l;
  l.design = load_design(run / "design.csv");
  l.series = load_series(run / "series.csv", l.design);
  l.binary = load_binary(run / "binary.csv", run / "binary_manifest.json", l.design);
  return l;
}

SeriesEnsemble retained_series(const fs::path& run, const Loaded& l) {
  require_file(run / "retained_runs.csv", "reduce");
  return l.series.subset(read_indices(run / "retained_runs.csv"));
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Eigen::MatrixXd chain_thetas(const fs::path& dir) {
  require_file(dir / "chain.csv", "calibrate");
  std::vector<std::string> header;
  Eigen::MatrixXd m = csv::read_matrix(dir / "chain.csv", &header);
  if (m.cols() < 1 + kParamDim || header.at(1) != "theta1")
    fail(ErrorKind::Parse, (dir / "chain.csv").string() + ": unexpected column layout");
  return m.middleCols(1, kParamDim);
}

std::vector<Mode> calibrated_modes(const fs::path& run) {
  std::vector<Mode> modes;
  for (Mode m : {Mode::BinaryOnly, Mode::Joint})
    if (fs::exists(run / ("calibrate_" + mode_name(m)) / "chain.csv")) modes.push_back(m);
  return modes;
}

ProjectionEmulator load_volume_emulator(const fs::path& run) {
  require_file(run / "emulator" / "gp_volume_0.json", "fit-emulator");
  auto meta = json::parse(csv::read_text(run / "emulator" / "projection.json"));
  return ProjectionEmulator{load_gp(run / "emulator" / "gp_volume_0.json"), meta.at("offset").get<double>()};
}

TrajectoryEmulator load_trajectory_emulator(const fs::path& run) {
  require_file(run / "emulator" / "pca_trajectory" / "pca.csv", "fit-emulator");
  TrajectoryEmulator t;
  t.pca = load_pca(run / "emulator" / "pca_trajectory").model;
  t.bank = load_bank(run / "emulator", "trajectory");
  auto meta = json::parse(csv::read_text(run / "emulator" / "projection.json"));
  auto times = meta.at("trajectory_times").get<std::vector<double>>();
  t.times = Eigen::Map<const Eigen::VectorXd>(times.data(), static_cast<Eigen::Index>(times.size()));
  return t;
}

}  // namespace

void progress(const std::string& message) { std::cerr << "[redcal] " << message << std::endl; }

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"simulate", "reduce", "fit-emulator", "loo-check",
                                             "calibrate", "project",  "summarize"};
  return c;
}

void simulate(const RunConfig& c, const fs::path& run) {
  synthetic::SyntheticConfig sim = c.simulate;
  sim.seed = c.seed;
  progress("generating synthetic ensemble");
  auto ens = synthetic::generate_ensemble(sim, c.threads);
  auto obs = synthetic::make_simulated_observations(sim.truth, sim, ens, c.seed);
  const Grid& grid = ens.binary.grid();
  fs::create_directories(run);
  save_design(ens.design, run / "design.csv");
  save_series(ens.series, run / "series.csv");
  save_binary(ens.binary, run / "binary.csv", run / "binary_manifest.json");
  save_field(ens.thickness, grid, run / "thickness.csv");
  csv::write_matrix(run / "volume.csv", {"delta_volume_500"}, ens.volume);
  save_series(SeriesEnsemble(ens.trajectory, ens.trajectory_times, ens.design), run / "trajectory.csv");
  save_series_observation(obs.series, ens.series.times(), run / "obs_series.csv");
  save_binary_observation(obs.binary, grid, run / "obs_binary.csv");
  json truth;
  truth["theta"] = std::vector<double>(obs.truth.data(), obs.truth.data() + kParamDim);
  truth["theta_obs"] = std::vector<double>(sim.theta_obs.data(), sim.theta_obs.data() + kParamDim);
  truth["delta_volume_500"] = obs.true_change;
  truth["seed"] = c.seed;
  csv::write_text(run / "truth.json", truth.dump(1) + "\n");
  csv::write_text(run / "config.ini", c.to_text());
  progress("wrote " + std::to_string(ens.design.size()) + " runs, " + std::to_string(ens.series.length()) +
           " time points, " + std::to_string(ens.binary.cells()) + " grid cells");
}

void reduce(const RunConfig& c, const fs::path& run) {
  Loaded l = load_ensembles(run);
  auto excl = exclude_unrealistic_runs(l.series, c.exclusion_threshold, c.exclusion_cutoff);
  for (const auto& w : excl.warnings) progress("warning: " + w);
  if (excl.retained.runs() < 2) fail(ErrorKind::InvalidArgument, "exclusion rule left fewer than 2 runs");
  write_indices(excl.retained_rows, run / "retained_runs.csv");
  write_indices(excl.excluded_rows, run / "excluded_runs.csv");
  progress("retained " + std::to_string(excl.retained.runs()) + " of " + std::to_string(l.series.runs()) + " runs");

  PcaFit pca = fit_pca(excl.retained, c.j1);
  save_pca(pca, run / "pca_series");
  save_design(excl.retained.design(), run / "pca_series" / "design.csv");

  LogisticPcaOptions lo;
  lo.max_iter = c.lpca_max_iter;
  lo.tol = c.lpca_tol;
  auto lfit = fit_logistic_pca(l.binary, c.j2, lo);
  for (const auto& w : lfit.warnings) progress("warning: " + w);
  save_logistic_pca(lfit.model, run / "pca_binary");
  progress("logistic PCA: " + std::to_string(lfit.model.iterations) + " iterations");

  auto sdisc = build_kernel_basis(l.series.times(), c.knots, c.kernel_range, c.m_eff);
  save_series_discrepancy(sdisc, run / "discrepancy_series_basis.csv");
  require_file(run / "obs_binary.csv", "simulate");
  auto z2 = load_binary_observation(run / "obs_binary.csv", l.binary.grid());
  auto bdisc = build_binary_basis(l.binary, z2, c.mismatch_threshold);
  for (const auto& w : bdisc.warnings) progress("warning: " + w);
  save_binary_discrepancy(bdisc, run / "discrepancy_binary_basis.csv");
}

void fit_emulator(const RunConfig& c, const fs::path& run) {
  require_file(run / "pca_series" / "pca.csv", "reduce");
  require_file(run / "pca_binary" / "pca.csv", "reduce");
  const GpFitOptions o = gp_options(c);
  const fs::path dir = run / "emulator";
  fs::create_directories(dir);

  PcaFit pca = load_pca(run / "pca_series");
  Design sdesign = load_design(run / "pca_series" / "design.csv");
  progress("fitting " + std::to_string(pca.model.components()) + " series emulators");
  save_bank(fit_bank(sdesign.points(), pca.scores.scores, o, "series", c.threads), dir);

  LogisticPcaModel lpca = load_logistic_pca(run / "pca_binary");
  Design design = load_design(run / "design.csv");
  progress("fitting " + std::to_string(lpca.components()) + " binary emulators");
  save_bank(fit_bank(design.points(), lpca.scores, o, "binary", c.threads), dir);

  require_file(run / "volume.csv", "simulate");
  std::vector<std::string> header;
  Eigen::MatrixXd vol = csv::read_matrix(run / "volume.csv", &header);
  progress("fitting projection emulators");
  auto volume = fit_projection_emulator({design, vol.col(0)}, o);
  save_gp(volume.model, "volume", 0, dir / "gp_volume_0.json");

  SeriesEnsemble traj = load_series(run / "trajectory.csv", design);
  PcaFit tpca = fit_pca(traj, std::min<Eigen::Index>(c.trajectory_components, traj.runs() - 1));
  save_pca(tpca, dir / "pca_trajectory");
  save_bank(fit_bank(design.points(), tpca.scores.scores, o, "trajectory", c.threads), dir);
  json meta;
  meta["offset"] = volume.offset;
  meta["trajectory_times"] = std::vector<double>(traj.times().data(), traj.times().data() + traj.length());
  csv::write_text(dir / "projection.json", meta.dump(1) + "\n");
}

void loo_check(const RunConfig& c, const fs::path& run) {
  Loaded l = load_ensembles(run);
  SeriesEnsemble retained = retained_series(run, l);
  LooOptions o;
  o.gp = gp_options(c);
  o.threads = c.threads;
  o.lpca_max_iter = c.lpca_max_iter;
  o.lpca_tol = c.lpca_tol;
  o.components = c.j1;
  progress("series leave-out experiment");
  auto series = leave_out_experiment(retained, central_holdout(retained.design(), c.loo_series_holdout), o);
  o.components = c.j2;
  progress("binary leave-out experiment");
  auto binary = leave_out_experiment(l.binary, central_holdout(l.design, c.loo_binary_holdout), o);
  save_loo_report({series, binary}, run / "loo_report.csv");
  progress("series standardized RMSE " + fmt(series.standardized_rmse) + ", 90% coverage " + fmt(series.coverage));
  progress("binary standardized RMSE " + fmt(binary.standardized_rmse) + ", 90% coverage " + fmt(binary.coverage));
}

DataBundle CalibrationInputs::bundle(const RunConfig& c, Mode mode) const {
  DataBundle d;
  d.z2 = &z2;
  d.lpca = &lpca;
  d.bdisc = &bdisc;
  d.binary_bank = &binary_bank;
  Eigen::VectorXd kappas = mode == Mode::Joint ? series_bank.fitted_kappas() : Eigen::VectorXd();
  d.prior = PriorConfig::from_fit(kappas, design, c.kappa_shape);
  d.prior.variance_shape = c.variance_shape;
  d.prior.variance_scale = c.variance_scale;
  if (mode == Mode::Joint) {
    d.robs = &robs;
    d.series_bank = &series_bank;
  }
  return d;
}

CalibrationInputs load_calibration_inputs(const fs::path& run, Mode mode) {
  require_file(run / "design.csv", "simulate");
  require_file(run / "pca_binary" / "pca.csv", "reduce");
  require_file(run / "discrepancy_binary_basis.csv", "reduce");
  CalibrationInputs in;
  in.design = load_design(run / "design.csv");
  Grid grid = load_grid_manifest(run / "binary_manifest.json");
  in.lpca = load_logistic_pca(run / "pca_binary");
  in.bdisc = load_binary_discrepancy(run / "discrepancy_binary_basis.csv");
  in.z2 = load_binary_observation(run / "obs_binary.csv", grid);
  if (!fs::exists(run / "emulator" / "gp_binary_0.json") ||
      (mode == Mode::Joint && !fs::exists(run / "emulator" / "gp_series_0.json")))
    fail(ErrorKind::MissingArtifact, "emulator bank missing; run fit-emulator");
  in.binary_bank = load_bank(run / "emulator", "binary");
  if (mode == Mode::Joint) {
    require_file(run / "pca_series" / "pca.csv", "reduce");
    require_file(run / "discrepancy_series_basis.csv", "reduce");
    in.pca = load_pca(run / "pca_series");
    in.sdisc = load_series_discrepancy(run / "discrepancy_series_basis.csv");
    in.series_bank = load_bank(run / "emulator", "series");
    std::vector<std::string> header;
    Eigen::MatrixXd obs = csv::read_matrix(run / "obs_series.csv", &header);
    in.z1.values = obs.row(0).transpose();
    in.robs = reduce_observation(in.z1, in.pca.model, in.sdisc);
  }
  return in;
}

void write_chain_outputs(const std::vector<PosteriorChain>& chains, const std::vector<std::uint64_t>& seeds,
                         Mode mode, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& names = chains.front().names;
  {
    std::ostringstream out;
    out << "chain";
    for (const auto& n : names) out << ',' << n;
    out << ",log_post\n";
    for (std::size_t k = 0; k < chains.size(); ++k) {
      const auto& ch = chains[k];
      for (Eigen::Index i = 0; i < ch.size(); ++i) {
        out << k;
        for (Eigen::Index j = 0; j < ch.samples.cols(); ++j) out << ',' << csv::format(ch.samples(i, j));
        out << ',' << csv::format(ch.log_post[i]) << '\n';
      }
    }
    csv::write_text(dir / "chain.csv", out.str());
  }

  Eigen::Index total = 0;
  for (const auto& ch : chains) total += ch.size();
  Eigen::MatrixXd pooled(total, static_cast<Eigen::Index>(names.size()));
  Eigen::Index r = 0;
  for (const auto& ch : chains) {
    pooled.middleRows(r, ch.size()) = ch.samples;
    r += ch.size();
  }

  std::ostringstream summary;
  summary << "parameter,mean,sd,q025,q50,q975\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto col = pooled.col(static_cast<Eigen::Index>(j));
    std::vector<double> v(col.data(), col.data() + col.size());
    auto s = stats::summarize(v);
    summary << names[j] << ',' << csv::format(s.mean) << ',' << csv::format(s.sd) << ',' << csv::format(s.q025) << ','
            << csv::format(s.q50) << ',' << csv::format(s.q975) << '\n';
    const bool plotted = names[j].rfind("theta", 0) == 0 || names[j] == "alpha1_sq" || names[j] == "alpha2_sq" ||
                         names[j] == "sigma_eps_sq" || names[j] == "nu2_1";
    if (plotted && s.sd > 0.0) {
      auto dens = stats::kernel_density(v);
      Eigen::MatrixXd m(static_cast<Eigen::Index>(dens.x.size()), 2);
      for (std::size_t i = 0; i < dens.x.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = dens.x[i];
        m(static_cast<Eigen::Index>(i), 1) = dens.density[i];
      }
      csv::write_matrix(dir / ("density_" + names[j] + ".csv"), {"x", "density"}, m);
    }
  }
  csv::write_text(dir / "posterior_summary.csv", summary.str());

  json diag;
  diag["mode"] = mode_name(mode);
  diag["chains"] = json::array();
  for (std::size_t k = 0; k < chains.size(); ++k) {
    auto d = diagnose(chains[k]);
    json jc;
    jc["seed"] = seeds[k];
    jc["stored"] = chains[k].size();
    jc["acceptance"] = d.acceptance;
    json mcse = json::object(), ks = json::object();
    bool stable = true;
    for (std::size_t j = 0; j < d.names.size(); ++j) mcse[d.names[j]] = d.mcse[j];
    for (const auto& s : d.stability) {
      ks[s.name] = s.ks;
      if (s.name.rfind("theta", 0) == 0) stable = stable && s.pass;
    }
    jc["mcse"] = mcse;
    jc["ks_half_chain"] = ks;
    jc["theta_stable"] = stable;
    jc["warnings"] = d.warnings;
    diag["chains"].push_back(jc);
  }
  csv::write_text(dir / "diagnostics.json", diag.dump(1) + "\n");
}

void calibrate(const RunConfig& c, const fs::path& run) {
  const Mode mode = parse_mode(c.mode);
  CalibrationInputs in = load_calibration_inputs(run, mode);
  DataBundle d = in.bundle(c, mode);
  for (const auto& w : in.robs.warnings) progress("warning: " + w);
  ChainState init = initial_state(d, mode);
  McmcOptions o;
  o.iterations = c.iterations;
  o.burn_in_fraction = c.burn_in_fraction;
  o.thin = c.thin;
  o.scales = c.scales;

  std::vector<PosteriorChain> chains(static_cast<std::size_t>(c.chains));
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < c.chains; ++k) seeds.push_back(c.seed + 1000003ULL * static_cast<std::uint64_t>(k));
  std::vector<std::exception_ptr> errors(chains.size());
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int k = next++; k < c.chains; k = next++) {
      try {
        McmcOptions ok = o;
        ok.seed = seeds[static_cast<std::size_t>(k)];
        chains[static_cast<std::size_t>(k)] = run_mcmc(init, d, mode, ok);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  progress("running " + std::to_string(c.chains) + " " + mode_name(mode) + " chain(s) of " +
           std::to_string(c.iterations) + " iterations");
  const int n_threads = std::clamp(c.threads, 1, c.chains);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& ch : chains)
    for (const auto& w : ch.warnings) progress("warning: " + w);
  write_chain_outputs(chains, seeds, mode, run / ("calibrate_" + mode_name(mode)));
}

void project(const RunConfig& c, const fs::path& run) {
  auto modes = calibrated_modes(run);
  if (modes.empty()) fail(ErrorKind::MissingArtifact, "posterior chain missing; run calibrate");
  ProjectionEmulator volume = load_volume_emulator(run);
  TrajectoryEmulator traj = load_trajectory_emulator(run);
  auto scale = [&](PredictiveSample s) {
    for (double& v : s.values) v *= c.sea_level_scale;
    return summarize_sample(std::move(s.values));
  };
  PredictiveSample prior = scale(prior_predictive(volume, c.prior_draws, c.seed + 1, c.mean_only));
  for (Mode m : modes) {
    const fs::path dir = run / ("calibrate_" + mode_name(m));
    Eigen::MatrixXd thetas = chain_thetas(dir);
    PredictiveSample post = scale(chain_to_predictive(thetas, volume, c.seed + 2, c.mean_only));
    save_projection_sample(post, dir / "projection_sample.csv");
    save_projection_summary(post, prior, dir / "projection_summary.csv");
    Envelope e = trajectory_envelope(thetas, traj, c.seed + 3, c.mean_only);
    e.mean *= c.sea_level_scale;
    e.lo95 *= c.sea_level_scale;
    e.median *= c.sea_level_scale;
    e.hi95 *= c.sea_level_scale;
    save_envelope(e, dir / "envelope.csv");
    progress(mode_name(m) + ": P(change < 0) = " + fmt(post.prob_negative));
  }
}

void summarize(const RunConfig& c, const fs::path& run) {
  (void)c;
  auto modes = calibrated_modes(run);
  std::ostringstream md;
  md << "# Calibration report\n\n";
  if (fs::exists(run / "truth.json")) {
    auto truth = json::parse(csv::read_text(run / "truth.json"));
    auto th = truth.at("theta").get<std::vector<double>>();
    md << "Truth: theta = (" << fmt(th[0]) << ", " << fmt(th[1]) << ", " << fmt(th[2]) << ", " << fmt(th[3])
       << "), change at +500 years = " << fmt(truth.at("delta_volume_500").get<double>()) << "\n\n";
  }

  if (fs::exists(run / "loo_report.csv")) {
    md << "## Leave-out experiments\n\n| channel | RMSE | standardized RMSE | 90% coverage |\n|---|---|---|---|\n";
    auto rows = csv::read(run / "loo_report.csv");
    std::map<std::string, std::array<std::string, 3>> agg;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 3) continue;
      if (r[1] == "all") {
        agg[r[0]][0] = r[2];
        agg[r[0]][1] = r.size() > 3 ? r[3] : "";
      } else if (r[1] == "standardized_rmse") {
        agg[r[0]][2] = r[2];
      }
    }
    for (const auto& [ch, v] : agg)
      md << "| " << ch << " | " << fmt(csv::parse_double(v[0], "rmse")) << " | "
         << fmt(csv::parse_double(v[2], "srmse")) << " | " << fmt(csv::parse_double(v[1], "coverage")) << " |\n";
    md << '\n';
  }

  std::map<Mode, std::vector<stats::Summary>> theta_summaries;
  std::map<Mode, std::pair<double, double>> projections;  // prob negative, +500 width
  for (Mode m : modes) {
    const fs::path dir = run / ("calibrate_" + mode_name(m));
    md << "## Posterior (" << mode_name(m) << ")\n\n| parameter | mean | sd | 2.5% | 50% | 97.5% |\n|---|---|---|---|---|---|\n";
    auto rows = csv::read(dir / "posterior_summary.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const bool scalar = r[0].rfind("theta", 0) == 0 || r[0] == "alpha1_sq" || r[0] == "alpha2_sq" ||
                          r[0] == "sigma_eps_sq" || r[0] == "nu2_1";
      if (!scalar) continue;
      stats::Summary s{csv::parse_double(r[1], "mean"), csv::parse_double(r[2], "sd"), csv::parse_double(r[3], "q025"),
                       csv::parse_double(r[4], "q50"), csv::parse_double(r[5], "q975")};
      if (r[0].rfind("theta", 0) == 0) theta_summaries[m].push_back(s);
      md << "| " << r[0] << " | " << fmt(s.mean) << " | " << fmt(s.sd) << " | " << fmt(s.q025) << " | " << fmt(s.q50)
         << " | " << fmt(s.q975) << " |\n";
    }
    auto diag = json::parse(csv::read_text(dir / "diagnostics.json"));
    md << "\n| chain | parameter | MCSE | half-chain KS | stable |\n|---|---|---|---|---|\n";
    int k = 0;
    std::ostringstream acc;
    for (const auto& jc : diag.at("chains")) {
      for (int p = 1; p <= kParamDim; ++p) {
        std::string name = "theta" + std::to_string(p);
        double ks = jc.at("ks_half_chain").contains(name) ? jc.at("ks_half_chain").at(name).get<double>() : 0.0;
        md << "| " << k << " | " << name << " | " << fmt(jc.at("mcse").at(name).get<double>()) << " | " << fmt(ks)
           << " | " << (ks < 0.1 ? "pass" : "warn") << " |\n";
      }
      acc << "Acceptance (chain " << k << "):";
      for (const auto& [b, rate] : jc.at("acceptance").items()) acc << ' ' << b << '=' << fmt(rate.get<double>(), 3);
      acc << "\n\n";
      ++k;
    }
    md << '\n' << acc.str();
    if (fs::exists(dir / "projection_summary.csv")) {
      auto pr = csv::read(dir / "projection_summary.csv");
      md << "| projection | mean | sd | 2.5% | 97.5% | P(change < 0) |\n|---|---|---|---|---|---|\n";
      for (std::size_t i = 1; i < pr.size(); ++i)
        md << "| " << pr[i][0] << " | " << fmt(csv::parse_double(pr[i][1], "mean")) << " | "
           << fmt(csv::parse_double(pr[i][2], "sd")) << " | " << fmt(csv::parse_double(pr[i][3], "q025")) << " | "
           << fmt(csv::parse_double(pr[i][5], "q975")) << " | " << fmt(csv::parse_double(pr[i][6], "p")) << " |\n";
      Envelope e = load_envelope(dir / "envelope.csv");
      projections[m] = {csv::parse_double(pr[1][6], "p"), e.width_at(500.0)};
      md << "\n+500-year envelope width: " << fmt(projections[m].second) << "\n\n";
    }
  }

  if (theta_summaries.count(Mode::Joint) && theta_summaries.count(Mode::BinaryOnly)) {
    md << "## Binary-only versus joint\n\n| quantity | binary_only | joint |\n|---|---|---|\n";
    for (int p = 0; p < kParamDim; ++p)
      md << "| sd(theta" << p + 1 << ") | " << fmt(theta_summaries[Mode::BinaryOnly][static_cast<std::size_t>(p)].sd)
         << " | " << fmt(theta_summaries[Mode::Joint][static_cast<std::size_t>(p)].sd) << " |\n";
    if (projections.count(Mode::Joint) && projections.count(Mode::BinaryOnly)) {
      md << "| P(change < 0) | " << fmt(projections[Mode::BinaryOnly].first) << " | "
         << fmt(projections[Mode::Joint].first) << " |\n";
      md << "| +500-year width | " << fmt(projections[Mode::BinaryOnly].second) << " | "
         << fmt(projections[Mode::Joint].second) << " |\n";
    }
    md << '\n';
  }
  csv::write_text(run / "report.md", md.str());
  progress("wrote " + (run / "report.md").string());
}

void run_command(const std::string& command, const RunConfig& c, const fs::path& run) {
  c.validate();
  if (command == "simulate") return simulate(c, run);
  if (command == "reduce") return reduce(c, run);
  if (command == "fit-emulator") return fit_emulator(c, run);
  if (command == "loo-check") return loo_check(c, run);
  if (command == "calibrate") return calibrate(c, run);
  if (command == "project") return project(c, run);
  if (command == "summarize") return summarize(c, run);
  fail(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
}

}  // namespace redcal::pipeline
