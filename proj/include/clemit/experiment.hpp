#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clemit/spectrum.hpp"

namespace clemit {

inline constexpr std::string_view kVersion = "clemit 0.1.0";

enum class RunMode { Dynamics, Spectrum, Derived, All };

struct InitialStateChoice {
  std::string label;
  std::string preset;  // empty when given by amplitudes/phases
  PureStateSpec spec;
};

struct ModelVariant {
  std::string label;
  ModelParams params;  // p_interf is set per job
};

struct OmegaRange {
  double min = -40.0;
  double max = 40.0;
  std::size_t count = 161;
};

struct DynamicsSettings {
  double t_max = 5.0;
  std::size_t points = 501;
  std::vector<double> snapshot_times;
};

struct SpectrumSettings {
  double filter_bandwidth = 0.1;
  double step = 0.002;
  std::vector<double> times;
  OmegaRange omega;
  std::string route = "quadrature";
  std::size_t correlation_dump_stride = 0;  // 0: no dump
};

/// One self-contained experiment. Variants are full model parameter sets
/// (the base model with per-variant overrides applied); jobs are the product
/// variants x initial states x p_values.
struct ExperimentConfig {
  std::string name;
  RunMode mode = RunMode::All;
  std::vector<ModelVariant> variants;
  std::vector<double> p_values;
  std::vector<InitialStateChoice> initial_states;
  DynamicsSettings dynamics;
  SpectrumSettings spectrum;
};

/// Parses a JSON document. Syntax errors raise ConfigParse with line and
/// column, unknown keys and type errors ConfigParse with the field path.
ExperimentConfig parse_config(std::string_view text);

/// Canonical JSON with every default filled in; feeding it back to
/// parse_config reproduces the same config.
std::string resolved_config_json(const ExperimentConfig& cfg);

/// Builds every model and grid the run would use without computing anything.
/// Throws the underlying error (prefixed with the field path) on failure and
/// returns a one-line summary on success.
std::string validate_config(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// Embedded JSON for a named preset, or nullopt.
std::optional<std::string> preset_json(std::string_view name);

struct RunOptions {
  std::filesystem::path out_dir = "clemit-out";
  unsigned workers = 1;
  std::optional<double> step_override;
  bool quiet = true;
};

struct RunSummary {
  std::filesystem::path directory;
  std::vector<std::string> artifacts;
};

/// Executes the experiment and writes its artifacts into out_dir/<name>.
/// Files are staged in a sibling directory and moved into place only when
/// every job succeeded.
RunSummary run_experiment(ExperimentConfig cfg, const RunOptions& opt);

}  // namespace clemit
