// redcal command-line driver. Links only the C API.
#include "redcal/redcal.h"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace {

struct ConfigHandle {
  redcal_config* ptr = nullptr;
  ~ConfigHandle() { redcal_config_destroy(ptr); }
};

int report(redcal_status s, const std::string& what) {
  std::fprintf(stderr, "redcal: %s: %s: %s\n", what.c_str(), redcal_status_name(s), redcal_last_error());
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-dimension emulation and calibration pipeline"};
  std::string command, config_path, out = "run";
  std::optional<std::string> seed, mode, iters, chains, threads;
  std::vector<std::string> overrides;
  bool print_defaults = false;

  app.add_option("command", command, "simulate | reduce | fit-emulator | loo-check | calibrate | project | summarize")
      ->check(CLI::IsMember({"simulate", "reduce", "fit-emulator", "loo-check", "calibrate", "project", "summarize"}));
  app.add_option("--config", config_path, "config file (sections with key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--out", out, "run directory")->capture_default_str();
  app.add_option("--seed", seed, "master seed");
  app.add_option("--mode", mode, "calibration mode")->check(CLI::IsMember({"binary_only", "joint"}));
  app.add_option("--iters", iters, "MCMC iterations kept after burn-in");
  app.add_option("--chains", chains, "independent chains");
  app.add_option("--threads", threads, "worker threads")->envname("REDCAL_THREADS");
  app.add_option("--set", overrides, "override one key, as section.key=value");
  app.add_flag("--print-defaults", print_defaults, "print the default config and exit");
  CLI11_PARSE(app, argc, argv);

  ConfigHandle cfg;
  if (auto s = redcal_config_create(&cfg.ptr); s != REDCAL_OK) return report(s, "config");

  if (print_defaults) {
    size_t needed = 0;
    redcal_config_to_text(cfg.ptr, nullptr, 0, &needed);
    std::string text(needed, '\0');
    if (auto s = redcal_config_to_text(cfg.ptr, text.data(), text.size(), &needed); s != REDCAL_OK)
      return report(s, "config");
    std::fputs(text.c_str(), stdout);
    return 0;
  }
  if (command.empty()) {
    std::fputs(app.help().c_str(), stderr);
    return 1;
  }

  if (!config_path.empty())
    if (auto s = redcal_config_load(cfg.ptr, config_path.c_str()); s != REDCAL_OK) return report(s, config_path);

  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (!v) return REDCAL_OK;
    return redcal_config_set(cfg.ptr, key, v->c_str());
  };
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "redcal: --set expects key=value, got '%s'\n", kv.c_str());
      return REDCAL_E_INVALID_ARGUMENT;
    }
    if (auto s = redcal_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()); s != REDCAL_OK)
      return report(s, "--set");
  }
  const std::pair<const char*, const std::optional<std::string>*> flags[] = {
      {"run.seed", &seed},         {"calibrate.mode", &mode},  {"calibrate.iterations", &iters},
      {"calibrate.chains", &chains}, {"run.threads", &threads}};
  for (const auto& [key, v] : flags)
    if (auto s = set(key, *v); s != REDCAL_OK) return report(s, key);

  if (auto s = redcal_run_command(cfg.ptr, command.c_str(), out.c_str()); s != REDCAL_OK) return report(s, command);
  return 0;
}
