#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mkv/solver.hpp"

namespace mkv {

struct ConvergenceRow {
  double delta = 0.0;
  double rms_error = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_diverged = 0;
  std::size_t batch_size = 0;  ///< adjusted P for RBM rows, 0 otherwise
  double moment4 = 0.0;        ///< E|X_T|^4 of the test solution
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::optional<double> slope;
  std::optional<double> intercept;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> metadata;

  /// Sorts rows by delta and refits the slope when at least two rows remain.
  void finalize();
};

/// Sum over particles of |a_i - b_i|^2 for one path.
double squared_difference(const EnsembleState& a, const EnsembleState& b);

/**
 * sqrt((1/(M N)) sum_paths sum_i |ref_i - test_i|^2), skipping paths where
 * either ensemble is non-finite. The number of skipped paths is written to
 * `diverged` when given. UsageError when every path diverged.
 */
double strong_error(std::span<const EnsembleState> reference, std::span<const EnsembleState> test,
                    std::size_t* diverged = nullptr);

/// (1/(M N)) sum |X_i|^q over finite ensembles.
double moment_estimate(std::span<const EnsembleState> ensembles, double q);

/// Sorted-sample p-Wasserstein distance between equal-size 1-D samples.
double wasserstein_p_1d(std::span<const double> a, std::span<const double> b, double p);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::vector<std::string> warnings;
};

/// OLS on (log2 delta, log2 error). Non-positive errors are dropped with a warning;
/// UsageError with fewer than two usable rows.
SlopeFit slope_fit(std::span<const std::pair<double, double>> rows);

struct ChaosRow {
  std::size_t n_small = 0;
  std::size_t n_large = 0;
  double distance = 0.0;        ///< mean over paths of W2(first n_small particles of each)
  double standard_error = 0.0;
};

struct ChaosReport {
  std::vector<ChaosRow> rows;
  bool trend_ok = true;
  std::size_t inversions = 0;
};

struct ChaosSettings {
  std::vector<std::size_t> n_values;
  double delta = 0.0;
  double horizon = 1.0;
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  Scheme scheme = Scheme::TruncatedEM_Full;
};

/**
 * W2 between the terminal empirical laws at N and 2N for consecutive N. Runs
 * are coupled by particle id (shared seed); the first N particles of the larger
 * ensemble are compared with the N-particle ensemble. The trend passes when
 * distances are non-increasing apart from at most one rise within two
 * combined standard errors.
 */
ChaosReport chaos_trend(const McKeanModel& model, const TruncationSpec& spec,
                        const ChaosSettings& settings);

struct TimingCase {
  std::string label;
  SolverConfig config;  ///< n_particles is overwritten per cell
};

struct TimingCell {
  std::string label;
  std::size_t n_particles = 0;
  double median_seconds = 0.0;
  std::optional<double> ratio;  ///< this cell / previous N of the same case
};

struct TimingTable {
  std::vector<TimingCell> cells;
  const TimingCell* find(const std::string& label, std::size_t n) const;
};

/// Median wall-clock of one simulated path per case and N after a one-step warm-up.
/// Runs on the calling thread. UsageError if repetitions < 3.
TimingTable timing_benchmark(const McKeanModel& model, const TruncationSpec& spec,
                             std::span<const TimingCase> cases,
                             std::span<const std::size_t> n_values, std::size_t repetitions,
                             std::uint64_t seed);

}  // namespace mkv
