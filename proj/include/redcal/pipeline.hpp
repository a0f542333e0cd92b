#pragma once

#include "redcal/calibration.hpp"
#include "redcal/config.hpp"
#include "redcal/projection.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace redcal::pipeline {

namespace fs = std::filesystem;

const std::vector<std::string>& commands();

void simulate(const RunConfig& c, const fs::path& run);
void reduce(const RunConfig& c, const fs::path& run);
void fit_emulator(const RunConfig& c, const fs::path& run);
void loo_check(const RunConfig& c, const fs::path& run);
void calibrate(const RunConfig& c, const fs::path& run);
void project(const RunConfig& c, const fs::path& run);
void summarize(const RunConfig& c, const fs::path& run);

/// Validates the config, then dispatches by command name.
void run_command(const std::string& command, const RunConfig& c, const fs::path& run);

/// Everything calibrate needs, loaded from a run directory.
struct CalibrationInputs {
  Design design;
  PcaFit pca;
  LogisticPcaModel lpca;
  SeriesDiscrepancyBasis sdisc;
  BinaryDiscrepancyBasis bdisc;
  EmulatorBank series_bank;
  EmulatorBank binary_bank;
  SeriesObservation z1;
  BinaryObservation z2;
  ReducedObservation robs;

  DataBundle bundle(const RunConfig& c, Mode mode) const;
};

CalibrationInputs load_calibration_inputs(const fs::path& run, Mode mode);

/// Writes chain.csv, diagnostics.json, posterior_summary.csv and density files.
void write_chain_outputs(const std::vector<PosteriorChain>& chains, const std::vector<std::uint64_t>& seeds,
                         Mode mode, const fs::path& dir);

void progress(const std::string& message);

}  // namespace redcal::pipeline
