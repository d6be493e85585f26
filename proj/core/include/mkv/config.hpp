#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mkv/registry.hpp"
#include "mkv/solver.hpp"

namespace mkv {

enum class Experiment { Converge, RbmSweep, Timing, Validate, Chaos };

std::string_view experiment_name(Experiment e);
Experiment parse_experiment(std::string_view name);

/// Parses "0.5", "1e-3", "2^-10", "1/3" and "-2^3". ConfigError otherwise.
double parse_number(std::string_view text);

struct TruncationSettings {
  bool enabled = true;
  double K = 0.0;  ///< 0 = model default
  double h_scale = kDefaultHScale;
  double epsilon = kDefaultEpsilon;
};

struct ReferenceSettings {
  Scheme scheme = Scheme::TamedEM_Full;
  double delta = 0x1p-12;
  std::optional<Scheme> alternative;  ///< second reference for the agreement check
  double agreement = 0.10;            ///< allowed gap as a fraction of the coarsest error
};

struct CriteriaSettings {
  std::optional<double> slope_min;
  std::optional<double> slope_max;
  std::optional<double> floor_offset;    ///< rbm-sweep: slope >= beta/2 - offset
  bool increasing = false;               ///< rbm-sweep: slopes strictly increase with beta
  std::vector<double> slope_targets;     ///< rbm-sweep: one per beta
  double slope_tolerance = 0.15;
  double max_divergence_rate = 0.01;
  std::optional<double> moment_ratio;    ///< max/min of E|X_T|^4 across deltas
};

struct TimingSettings {
  std::vector<std::size_t> n_values{1024, 4096, 16384};
  double delta = 0x1p-7;
  std::size_t repetitions = 3;
  std::vector<double> betas{1.0, 0.5, 1.0 / 3.0};
  double full_ratio_min = 8.0, full_ratio_max = 32.0;
  double rbm_ratio_min = 2.5, rbm_ratio_max = 7.0;
  double min_speedup = 5.0;
};

struct ChaosConfig {
  std::vector<std::size_t> n_values{64, 128, 256, 512};
  double delta = 0x1p-7;
};

struct ValidateSettings {
  std::vector<std::size_t> n_values{4, 6};
  std::vector<std::size_t> batch_sizes{2, 3};
  std::vector<std::size_t> q_values{1, 2};
  std::size_t configurations = 3;
  double tolerance = 1e-12;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Converge;
  bool experiment_declared = false;  ///< [run] experiment was present
  std::string model_name = "linear-diffusion-interaction";
  ExampleParameters params;
  std::uint64_t seed = 1;
  std::size_t n_particles = 1024;
  double horizon = 1.0;
  std::size_t paths = 200;
  std::size_t threads = 1;
  std::vector<double> deltas{0x1p-10, 0x1p-9, 0x1p-8, 0x1p-7};
  Scheme scheme = Scheme::TruncatedEM_Full;
  std::vector<double> betas;
  std::vector<std::size_t> batch_sizes;  ///< fixed P values instead of betas
  bool exclude_self = true;
  Summation summation = Summation::Auto;
  ReferenceSettings reference;
  TruncationSettings truncation;
  CriteriaSettings criteria;
  TimingSettings timing;
  ChaosConfig chaos;
  ValidateSettings validate;
  std::filesystem::path out_dir = "results";

  TruncationSpec truncation_spec() const;
  /// Cross-field checks; throws ConfigError naming the field.
  void check() const;
};

/// Reads the INI grammar documented in the README. Unknown sections or keys are
/// errors; syntax errors carry the line number. When `experiment` is given it
/// selects the experiment, and a different [run] experiment is a ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<Experiment> experiment = std::nullopt);
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>",
                              std::optional<Experiment> experiment = std::nullopt);

/// FNV-1a 64 of the normalized config text, printed in CSV headers.
std::uint64_t config_hash(const std::string& text);

}  // namespace mkv
