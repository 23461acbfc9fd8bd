#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ttkrylov/tt.hpp"

namespace ttk::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Experiment {
  Poisson,
  Convdiff,
  ParamConvdiff,
  HeatParam,
  MultiRhsPoisson,
  MultiRhsConvdiff,
  EigenRhs,
  PrecSweep,
  RelaxedCompare,
};

enum class OutputFormat { Csv, Json };

std::string to_string(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::Poisson;
  Index n = 15;
  Index d = 3;
  Index p = 0;
  Index m = 50;
  double epsilon = 1e-5;
  double delta = 1e-5;
  Index maxit = 50;
  Index q = 0;  ///< 0 selects round(n/4)
  double tau = 1e-2;
  bool precondition = true;
  std::uint64_t seed = 0;
  std::string output = "run";
  OutputFormat format = OutputFormat::Csv;

  std::string policy = "constant";    ///< constant | relaxed
  std::string criterion = "eta_Ab";   ///< eta_Ab | eta_b | eta_tilde_b
  Index assemble_every = 1;
  Index norm_samples = 10;
  Index sample_rank = 5;
  bool bounds = false;
  Index rank_cap = 8;
  double param_lo = 0;  ///< 0 selects the experiment default
  double param_hi = 0;
  std::string boundary = "reject";   ///< reject | closed
  Index eigen_count = 10;
  std::vector<Index> q_list;
  std::vector<double> tau_list;
  std::vector<double> delta_list;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; `#` starts a comment.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);
/// Later entries override earlier ones.
void apply_overrides(KeyValues& base, const KeyValues& overrides);

ExperimentConfig config_from(const KeyValues& kv);
/// Throws ConfigError on invalid fields; returns warnings.
std::vector<std::string> validate(const ExperimentConfig& cfg);
KeyValues to_key_values(const ExperimentConfig& cfg);

struct Preset {
  std::string name;
  std::string description;
  bool long_running = false;
  std::string text;
};

const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view name);

}  // namespace ttk::cli
