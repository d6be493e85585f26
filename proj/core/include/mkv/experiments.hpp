#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mkv/analysis.hpp"
#include "mkv/config.hpp"

namespace mkv {

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kRuntime = 1;
inline constexpr int kConfig = 2;
inline constexpr int kCriterion = 3;
inline constexpr int kDivergence = 4;
inline constexpr int kWarning = 5;
}  // namespace exit_code

std::string version_string();

struct ValidationRow {
  std::string check;  ///< chi-mean, chi-variance, co-batch, count
  std::string kernel;
  std::size_t n = 0, p = 0, q = 0, configuration = 0;
  double lhs = 0.0, rhs = 0.0;
  bool pass = false;
};

/// Right-hand side of the batch-variance identity as a function of (N, P, Lambda).
using VarianceFormula = std::function<double(std::size_t, std::size_t, double)>;

double batch_variance(std::size_t n, std::size_t p, double lambda);

/// Enumeration checks over every valid (N, P) cell of the settings. Random
/// 1-D configurations are standard normal draws from the seed.
std::vector<ValidationRow> validation_suite(const ValidateSettings& settings, std::uint64_t seed,
                                            const VarianceFormula& variance = batch_variance);

struct ConvergenceCase {
  std::string label;
  std::optional<double> beta;
  std::vector<SolverConfig> configs;  ///< one per delta
};

struct StudyResult {
  std::vector<ConvergenceReport> reports;          ///< one per case
  std::optional<ConvergenceRow> reference_gap;     ///< reference vs alternative reference
  std::size_t reference_diverged = 0;
};

/**
 * Runs every case against `reference` on shared noise, one coupled run per
 * path, with paths spread over `threads` workers and reduced in path order.
 */
StudyResult convergence_study(const McKeanModel& model, const TruncationSpec& spec,
                              const SolverConfig& reference,
                              const std::optional<SolverConfig>& alternative,
                              std::span<const ConvergenceCase> cases, std::uint64_t seed,
                              std::size_t paths, std::size_t threads);

struct ExperimentOutcome {
  int exit_code = exit_code::kSuccess;
  std::vector<std::string> log;
  std::vector<ConvergenceReport> reports;
  std::optional<TimingTable> timing;
  std::optional<ChaosReport> chaos;
  std::vector<ValidationRow> validation;
  std::vector<std::filesystem::path> files;
};

/// `config_text` is hashed into the CSV header line.
ExperimentOutcome run_converge(const ExperimentConfig& config, const std::string& config_text);
ExperimentOutcome run_rbm_sweep(const ExperimentConfig& config, const std::string& config_text);
ExperimentOutcome run_timing(const ExperimentConfig& config, const std::string& config_text);
ExperimentOutcome run_validate(const ExperimentConfig& config, const std::string& config_text);
ExperimentOutcome run_chaos(const ExperimentConfig& config, const std::string& config_text);

ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::string& config_text);

}  // namespace mkv
