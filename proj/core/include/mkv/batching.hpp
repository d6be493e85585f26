#pragma once

#include <array>
#include <cstdint>

#include "mkv/common.hpp"
#include "mkv/kernels.hpp"

namespace mkv {

class RandomStream;

/**
 * @brief A division of {0..N-1} into n = N/P batches of size P.
 *
 * Stored canonically: members ascending within a batch, batches ordered by
 * their lowest member. `members` is batch-major (n x P), `assignment[i]` is
 * the batch index of particle i.
 */
class BatchPartition {
 public:
  BatchPartition(std::size_t n_particles, std::size_t batch_size,
                 std::vector<std::uint32_t> members);

  std::size_t n_particles() const { return n_; }
  std::size_t batch_size() const { return p_; }
  std::size_t n_batches() const { return p_ == 0 ? 0 : n_ / p_; }

  std::span<const std::uint32_t> batch(std::size_t b) const {
    return {members_.data() + b * p_, p_};
  }
  std::span<const std::uint32_t> members() const { return members_; }
  std::span<const std::uint32_t> assignment() const { return assignment_; }
  std::size_t batch_of(std::size_t i) const { return assignment_[i]; }
  /// Position of particle i inside its batch.
  std::size_t slot_of(std::size_t i) const { return slot_[i]; }

  bool operator==(const BatchPartition& o) const { return members_ == o.members_ && p_ == o.p_; }

 private:
  std::size_t n_;
  std::size_t p_;
  std::vector<std::uint32_t> members_;
  std::vector<std::uint32_t> assignment_;
  std::vector<std::uint32_t> slot_;
};

/// ConfigError unless P >= 2 and P divides N.
void check_batch_shape(std::size_t n_particles, std::size_t batch_size);

/// Uniform random division: Fisher-Yates shuffle, chunk into batches, canonicalize.
BatchPartition sample_partition(std::size_t n_particles, std::size_t batch_size,
                                RandomStream& stream);

/// (nP)! / ((P!)^n n!) as a double (exact while below 2^53).
double partition_count(std::size_t n_particles, std::size_t batch_size);

inline constexpr double kEnumerationGuard = 1e6;

/// Every division exactly once, in lexicographic order. UsageError above the guard.
std::vector<BatchPartition> enumerate_partitions(std::size_t n_particles, std::size_t batch_size);

/**
 * chi_i = (1/(P-1)) sum_{j in C(i), j != i} k(x_i, x_j) - (1/(N-1)) sum_{j != i} k(x_i, x_j)
 */
std::vector<double> chi_deviation(const EnsembleState& config, const PairKernel& kernel,
                                  const BatchPartition& partition, std::size_t i);

/// Lambda_i = (1/(N-2)) sum_{j != i} |k(x_i, x_j) - mean_{j' != i} k(x_i, x_j')|^2, N >= 3.
double lambda_statistic(const EnsembleState& config, const PairKernel& kernel, std::size_t i);

struct ChiMomentReport {
  double mean_error = 0.0;     ///< |E chi_i| over all partitions
  double variance_lhs = 0.0;   ///< E |chi_i - E chi_i|^2 over all partitions
  double variance_rhs = 0.0;   ///< (1/(P-1) - 1/(N-1)) Lambda_i
  std::size_t partitions = 0;
};

/// Exact moments of chi_i over the uniform law on all partitions.
ChiMomentReport verify_chi_moments(const EnsembleState& config, const PairKernel& kernel,
                                   std::size_t i, std::size_t batch_size);

/// prod_{j=1..q} (P - j) / (N - j); UsageError if q >= N.
double indicator_product_expectation(std::size_t n_particles, std::size_t batch_size,
                                     std::size_t q);

/// Fraction of all partitions in which particles 1..q share particle 0's batch.
double indicator_product_frequency(std::size_t n_particles, std::size_t batch_size,
                                   std::size_t q);

struct FourthMomentRow {
  std::size_t batch_size = 0;
  double fourth_moment = 0.0;  ///< Monte Carlo E |chi_i|^4
  double scaled = 0.0;         ///< fourth_moment * P^2 / Q
  double decrease = 0.0;       ///< previous row's fourth_moment / this one (0 for the first row)
};

struct FourthMomentReport {
  std::vector<FourthMomentRow> rows;
  double Q = 0.0;
  std::array<double, 4> M{};  ///< M_1..M_4
};

/// Q(x; k) = M1^4 + M2 M1^2 + M2^2 + M3 M1 + M4 with M_q = (1/N) sum_j |k(x_i, x_j)|^q.
FourthMomentReport chi_fourth_moment_scaling(const EnsembleState& config,
                                             const PairKernel& kernel, std::size_t i,
                                             std::span<const std::size_t> batch_sizes,
                                             std::size_t samples, std::uint64_t seed);

}  // namespace mkv
