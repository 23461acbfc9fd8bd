#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ttkrylov/cli/config.hpp"

namespace ttk::cli {

struct PhaseTiming {
  std::string phase;
  double seconds = 0;
};

struct RunManifest {
  KeyValues config;
  std::string started;
  std::string finished;
  std::string version;
  std::vector<std::string> files;
  std::vector<PhaseTiming> phases;
  std::vector<std::string> warnings;
  bool converged = false;
  /// Process exit status for this run.
  int status = 0;
};

/// Builds, solves, diagnoses and writes every output under `out_dir`.
RunManifest run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace ttk::cli
