#include "redcal/redcal.h"

#include "redcal/config.hpp"
#include "redcal/emulator.hpp"
#include "redcal/pipeline.hpp"
#include "redcal/stats.hpp"
#include "redcal/synthetic.hpp"

#include <cstring>
#include <new>
#include <string>

struct redcal_config {
  redcal::RunConfig value;
};

struct redcal_gp {
  redcal::GpComponentModel model;
};

namespace {

thread_local std::string g_last_error;

redcal_status status_of(redcal::ErrorKind k) {
  switch (k) {
    case redcal::ErrorKind::InvalidArgument: return REDCAL_E_INVALID_ARGUMENT;
    case redcal::ErrorKind::Parse: return REDCAL_E_PARSE;
    case redcal::ErrorKind::Io: return REDCAL_E_IO;
    case redcal::ErrorKind::Numeric: return REDCAL_E_NUMERIC;
    case redcal::ErrorKind::MissingArtifact: return REDCAL_E_MISSING_ARTIFACT;
  }
  return REDCAL_E_INTERNAL;
}

template <class F>
redcal_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return REDCAL_OK;
  } catch (const redcal::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return REDCAL_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return REDCAL_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return REDCAL_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) redcal::fail(redcal::ErrorKind::InvalidArgument, std::string(what) + " must not be null");
}

void copy_out(const std::string& s, char* buf, size_t len, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || len == 0) return;
  if (len < s.size() + 1) redcal::fail(redcal::ErrorKind::InvalidArgument, "buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

redcal::Theta theta_of(const double* t) {
  redcal::Theta th{t[0], t[1], t[2], t[3]};
  if (!redcal::ParameterPoint::in_unit_cube(th))
    redcal::fail(redcal::ErrorKind::InvalidArgument, "parameter point outside [0,1]^4");
  return th;
}

}  // namespace

extern "C" {

const char* redcal_version(void) { return "0.1.0"; }

const char* redcal_last_error(void) { return g_last_error.c_str(); }

const char* redcal_status_name(redcal_status s) {
  switch (s) {
    case REDCAL_OK: return "ok";
    case REDCAL_E_INVALID_ARGUMENT: return "invalid argument";
    case REDCAL_E_IO: return "i/o error";
    case REDCAL_E_PARSE: return "parse error";
    case REDCAL_E_NUMERIC: return "numerical failure";
    case REDCAL_E_MISSING_ARTIFACT: return "missing artifact";
    case REDCAL_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

redcal_status redcal_config_create(redcal_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new redcal_config{};
  });
}

void redcal_config_destroy(redcal_config* c) { delete c; }

redcal_status redcal_config_load(redcal_config* c, const char* path) {
  return guarded([&] {
    need(c, "config");
    need(path, "path");
    c->value = redcal::RunConfig::load(path);
  });
}

redcal_status redcal_config_set(redcal_config* c, const char* key, const char* value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    c->value.set(key, value);
  });
}

redcal_status redcal_config_get(const redcal_config* c, const char* key, char* buf, size_t len, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    copy_out(c->value.get(key), buf, len, needed);
  });
}

redcal_status redcal_config_to_text(const redcal_config* c, char* buf, size_t len, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    copy_out(c->value.to_text(), buf, len, needed);
  });
}

redcal_status redcal_config_validate(const redcal_config* c) {
  return guarded([&] {
    need(c, "config");
    c->value.validate();
  });
}

redcal_status redcal_run_command(const redcal_config* c, const char* command, const char* run_dir) {
  return guarded([&] {
    need(c, "config");
    need(command, "command");
    need(run_dir, "run directory");
    redcal::pipeline::run_command(command, c->value, run_dir);
  });
}

redcal_status redcal_gp_fit(const double* design, size_t n, const double* y, int restarts, uint64_t seed,
                            redcal_gp** out) {
  return guarded([&] {
    need(design, "design");
    need(y, "y");
    need(out, "out");
    if (n < 2) redcal::fail(redcal::ErrorKind::InvalidArgument, "need at least 2 design points");
    const auto rows = static_cast<Eigen::Index>(n);
    redcal::DesignMatrix d =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, redcal::kParamDim, Eigen::RowMajor>>(design, rows,
                                                                                                    redcal::kParamDim);
    Eigen::VectorXd scores = Eigen::Map<const Eigen::VectorXd>(y, rows);
    redcal::GpFitOptions o;
    o.restarts = restarts;
    o.seed = seed;
    *out = new redcal_gp{redcal::fit_component(d, scores, o)};
  });
}

void redcal_gp_destroy(redcal_gp* gp) { delete gp; }

redcal_status redcal_gp_predict(const redcal_gp* gp, const double theta[4], double* mean, double* variance) {
  return guarded([&] {
    need(gp, "gp");
    need(theta, "theta");
    auto p = gp->model.predict(theta_of(theta));
    if (mean) *mean = p.mean;
    if (variance) *variance = p.variance;
  });
}

redcal_status redcal_gp_hyperparameters(const redcal_gp* gp, double phi[4], double* kappa, double* zeta) {
  return guarded([&] {
    need(gp, "gp");
    const auto& h = gp->model.hyper();
    if (phi)
      for (int k = 0; k < redcal::kParamDim; ++k) phi[k] = h.phi[static_cast<std::size_t>(k)];
    if (kappa) *kappa = h.kappa;
    if (zeta) *zeta = h.zeta;
  });
}

redcal_status redcal_gp_neg_log_likelihood(const redcal_gp* gp, double* out) {
  return guarded([&] {
    need(gp, "gp");
    need(out, "out");
    *out = gp->model.neg_log_likelihood();
  });
}

redcal_status redcal_mcse(const double* x, size_t n, double* out) {
  return guarded([&] {
    need(x, "x");
    need(out, "out");
    *out = redcal::stats::batch_means_mcse(std::span<const double>(x, n));
  });
}

redcal_status redcal_forward_series(const double theta[4], const double* times, size_t n, double* out) {
  return guarded([&] {
    need(theta, "theta");
    need(times, "times");
    need(out, "out");
    Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(times, static_cast<Eigen::Index>(n));
    Eigen::VectorXd v = redcal::synthetic::forward_series(theta_of(theta), t);
    std::memcpy(out, v.data(), n * sizeof(double));
  });
}

redcal_status redcal_forecast_change(const double theta[4], double t, double* out) {
  return guarded([&] {
    need(theta, "theta");
    need(out, "out");
    *out = redcal::synthetic::forecast_change(theta_of(theta), t);
  });
}

}  // extern "C"
