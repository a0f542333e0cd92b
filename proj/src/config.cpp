#include "redcal/config.hpp"

#include "redcal/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace redcal {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(ErrorKind::Parse, "config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  return csv::parse_double(v, "config key '" + key + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::Parse, "config key '" + key + "': expected true or false, got '" + v + "'");
}

Theta parse_theta(const std::string& key, const std::string& v) {
  Theta t;
  std::stringstream ss(v);
  std::string part;
  int k = 0;
  while (std::getline(ss, part, ',')) {
    if (k >= kParamDim) fail(ErrorKind::Parse, "config key '" + key + "': expected 4 comma-separated values");
    t[k++] = parse_real(key, trim(part));
  }
  if (k != kParamDim) fail(ErrorKind::Parse, "config key '" + key + "': expected 4 comma-separated values");
  return t;
}

std::string theta_text(const Theta& t) {
  return shortest(t[0]) + ", " + shortest(t[1]) + ", " + shortest(t[2]) + ", " + shortest(t[3]);
}

struct Entry {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;

  std::string full() const { return section + "." + key; }
};

template <class T>
Entry real(std::string s, std::string k, T RunConfig::*field) {
  return {s, k, [field](RunConfig& c, const std::string& key, const std::string& v) { c.*field = parse_real(key, v); },
          [field](const RunConfig& c) { return shortest(c.*field); }};
}

template <class T>
Entry integer(std::string s, std::string k, T RunConfig::*field) {
  return {s, k,
          [field](RunConfig& c, const std::string& key, const std::string& v) {
            c.*field = static_cast<T>(parse_integer(key, v));
          },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

template <class T>
Entry sim_real(std::string k, T synthetic::SyntheticConfig::*field) {
  return {"simulate", k,
          [field](RunConfig& c, const std::string& key, const std::string& v) { c.simulate.*field = parse_real(key, v); },
          [field](const RunConfig& c) { return shortest(c.simulate.*field); }};
}

Entry sim_int(std::string k, int synthetic::SyntheticConfig::*field) {
  return {"simulate", k,
          [field](RunConfig& c, const std::string& key, const std::string& v) {
            c.simulate.*field = static_cast<int>(parse_integer(key, v));
          },
          [field](const RunConfig& c) { return std::to_string(c.simulate.*field); }};
}

Entry sim_theta(std::string k, Theta synthetic::SyntheticConfig::*field) {
  return {"simulate", k,
          [field](RunConfig& c, const std::string& key, const std::string& v) { c.simulate.*field = parse_theta(key, v); },
          [field](const RunConfig& c) { return theta_text(c.simulate.*field); }};
}

Entry step(std::string k, double ProposalScales::*field) {
  return {"calibrate", k,
          [field](RunConfig& c, const std::string& key, const std::string& v) { c.scales.*field = parse_real(key, v); },
          [field](const RunConfig& c) { return shortest(c.scales.*field); }};
}

const std::vector<Entry>& entries() {
  using S = synthetic::SyntheticConfig;
  static const std::vector<Entry> table = {
      integer("run", "seed", &RunConfig::seed),
      integer("run", "threads", &RunConfig::threads),
      sim_int("grid_rows", &S::grid_rows),
      sim_int("grid_cols", &S::grid_cols),
      sim_real("time_start", &S::time_start),
      sim_real("time_end", &S::time_end),
      sim_real("time_step", &S::time_step),
      sim_real("forecast_end", &S::forecast_end),
      sim_real("forecast_step", &S::forecast_step),
      sim_int("design_levels", &S::design_levels),
      sim_theta("truth", &S::truth),
      sim_theta("theta_obs", &S::theta_obs),
      sim_real("discrepancy_sill", &S::discrepancy_sill),
      sim_real("discrepancy_range", &S::discrepancy_range),
      sim_real("keep_fraction", &S::keep_fraction),
      real("reduce", "exclusion_threshold", &RunConfig::exclusion_threshold),
      real("reduce", "exclusion_cutoff", &RunConfig::exclusion_cutoff),
      integer("reduce", "j1", &RunConfig::j1),
      integer("reduce", "j2", &RunConfig::j2),
      integer("reduce", "lpca_max_iter", &RunConfig::lpca_max_iter),
      real("reduce", "lpca_tol", &RunConfig::lpca_tol),
      integer("reduce", "knots", &RunConfig::knots),
      real("reduce", "kernel_range", &RunConfig::kernel_range),
      integer("reduce", "m_eff", &RunConfig::m_eff),
      real("reduce", "mismatch_threshold", &RunConfig::mismatch_threshold),
      integer("emulator", "restarts", &RunConfig::restarts),
      integer("emulator", "max_evaluations", &RunConfig::max_evaluations),
      integer("emulator", "loo_series_holdout", &RunConfig::loo_series_holdout),
      integer("emulator", "loo_binary_holdout", &RunConfig::loo_binary_holdout),
      integer("emulator", "trajectory_components", &RunConfig::trajectory_components),
      {"calibrate", "mode", [](RunConfig& c, const std::string&, const std::string& v) { c.mode = v; },
       [](const RunConfig& c) { return c.mode; }},
      integer("calibrate", "iterations", &RunConfig::iterations),
      real("calibrate", "burn_in_fraction", &RunConfig::burn_in_fraction),
      integer("calibrate", "thin", &RunConfig::thin),
      integer("calibrate", "chains", &RunConfig::chains),
      real("calibrate", "kappa_shape", &RunConfig::kappa_shape),
      real("calibrate", "variance_shape", &RunConfig::variance_shape),
      real("calibrate", "variance_scale", &RunConfig::variance_scale),
      step("step_theta", &ProposalScales::theta),
      step("step_psi", &ProposalScales::psi),
      step("step_kappa", &ProposalScales::kappa),
      step("step_nu2", &ProposalScales::nu2),
      step("step_alpha2", &ProposalScales::alpha2),
      step("step_alpha1", &ProposalScales::alpha1),
      step("step_sigma", &ProposalScales::sigma),
      step("step_r", &ProposalScales::r),
      integer("project", "prior_draws", &RunConfig::prior_draws),
      {"project", "mean_only",
       [](RunConfig& c, const std::string& key, const std::string& v) { c.mean_only = parse_bool(key, v); },
       [](const RunConfig& c) { return std::string(c.mean_only ? "true" : "false"); }},
      real("project", "sea_level_scale", &RunConfig::sea_level_scale),
  };
  return table;
}

const Entry& find_entry(const std::string& key) {
  const auto& table = entries();
  const Entry* hit = nullptr;
  for (const auto& e : table) {
    if (e.full() == key) return e;
    if (e.key == key) {
      if (hit) fail(ErrorKind::InvalidArgument, "config key '" + key + "' is ambiguous; qualify it with its section");
      hit = &e;
    }
  }
  if (!hit) fail(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  return *hit;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) fail(ErrorKind::InvalidArgument, "config key '" + key + "': " + what);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const Entry& e = find_entry(key);
  e.set(*this, e.full(), trim(value));
}

std::string RunConfig::get(const std::string& key) const { return find_entry(key).get(*this); }

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> k;
  for (const auto& e : entries()) k.push_back(e.full());
  return k;
}

void RunConfig::validate() const {
  const auto& s = simulate;
  require(threads >= 1, "run.threads", "must be at least 1");
  require(s.grid_rows >= 1, "simulate.grid_rows", "must be positive");
  require(s.grid_cols >= 1, "simulate.grid_cols", "must be positive");
  require(s.time_step > 0.0, "simulate.time_step", "must be positive");
  require(s.time_end > s.time_start, "simulate.time_end", "must exceed simulate.time_start");
  require(s.forecast_step > 0.0, "simulate.forecast_step", "must be positive");
  require(s.forecast_end >= s.forecast_step, "simulate.forecast_end", "must be at least one forecast step");
  require(s.design_levels >= 2, "simulate.design_levels", "must be at least 2");
  require(ParameterPoint::in_unit_cube(s.truth), "simulate.truth", "must lie in [0,1]^4");
  require(ParameterPoint::in_unit_cube(s.theta_obs), "simulate.theta_obs", "must lie in [0,1]^4");
  require(s.discrepancy_sill >= 0.0, "simulate.discrepancy_sill", "must be non-negative");
  require(s.discrepancy_range > 0.0, "simulate.discrepancy_range", "must be positive");
  require(s.keep_fraction > 0.0 && s.keep_fraction <= 1.0, "simulate.keep_fraction", "must lie in (0, 1]");

  const double n = std::floor((s.time_end - s.time_start) / s.time_step + 0.5) + 1.0;
  const double p = std::pow(static_cast<double>(s.design_levels), kParamDim);
  const double m = static_cast<double>(s.grid_rows) * s.grid_cols;
  require(exclusion_cutoff >= s.time_start && exclusion_cutoff <= s.time_end, "reduce.exclusion_cutoff",
          "must lie within the simulated time range");
  require(j1 >= 1 && static_cast<double>(j1) <= n, "reduce.j1", "must lie in [1, n]");
  require(j2 >= 1 && static_cast<double>(j2) <= std::min(p, m), "reduce.j2", "must lie in [1, min(p, m)]");
  require(lpca_max_iter >= 1, "reduce.lpca_max_iter", "must be positive");
  require(lpca_tol > 0.0, "reduce.lpca_tol", "must be positive");
  require(knots >= 2 && static_cast<double>(knots) <= n, "reduce.knots", "must lie in [2, n]");
  require(kernel_range > 0.0, "reduce.kernel_range", "must be positive");
  require(m_eff >= 1 && m_eff <= knots, "reduce.m_eff", "must lie in [1, reduce.knots]");
  require(static_cast<double>(j1 + m_eff) <= n, "reduce.m_eff", "j1 + m_eff must not exceed n");
  require(mismatch_threshold > 0.0 && mismatch_threshold < 1.0, "reduce.mismatch_threshold", "must lie in (0, 1)");
  require(restarts >= 1, "emulator.restarts", "must be at least 1");
  require(max_evaluations >= 10, "emulator.max_evaluations", "must be at least 10");
  require(loo_series_holdout >= 1, "emulator.loo_series_holdout", "must be positive");
  require(loo_binary_holdout >= 1 && static_cast<double>(loo_binary_holdout) <= p - 8, "emulator.loo_binary_holdout",
          "must leave at least 8 training runs");
  require(trajectory_components >= 1, "emulator.trajectory_components", "must be positive");
  require(mode == "joint" || mode == "binary_only", "calibrate.mode", "must be binary_only or joint");
  require(iterations >= 1, "calibrate.iterations", "must be positive");
  require(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0, "calibrate.burn_in_fraction", "must lie in [0, 1)");
  require(thin >= 1 && thin <= iterations, "calibrate.thin", "must lie in [1, iterations]");
  require(chains >= 1, "calibrate.chains", "must be at least 1");
  require(kappa_shape > 0.0, "calibrate.kappa_shape", "must be positive");
  require(variance_shape > 0.0, "calibrate.variance_shape", "must be positive");
  require(variance_scale > 0.0, "calibrate.variance_scale", "must be positive");
  for (const char* k : {"step_theta", "step_psi", "step_kappa", "step_nu2", "step_alpha2", "step_alpha1", "step_sigma",
                        "step_r"})
    require(parse_real(k, get(std::string("calibrate.") + k)) >= 0.0, std::string("calibrate.") + k,
            "must be non-negative");
  require(prior_draws >= 1, "project.prior_draws", "must be positive");
  require(sea_level_scale > 0.0, "project.sea_level_scale", "must be positive");
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  std::string section;
  for (const auto& e : entries()) {
    if (e.section != section) {
      if (!section.empty()) out << '\n';
      section = e.section;
      out << '[' << section << "]\n";
    }
    out << e.key << " = " << e.get(*this) << '\n';
  }
  return out.str();
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Parse, origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Parse, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    c.set(section.empty() ? key : section + "." + key, value);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_text(csv::read_text(path), path.string());
}

}  // namespace redcal
