#pragma once

#include <optional>
#include <string>
#include <variant>

#include "mkv/batching.hpp"
#include "mkv/model.hpp"
#include "mkv/randomness.hpp"

namespace mkv {

enum class Scheme {
  TruncatedEM_Full,
  TamedEM_Full,
  TruncatedMilstein_Full,
  TruncatedEM_RBM,
  TruncatedMilstein_RBM,
};

std::string_view scheme_name(Scheme s);
/// Accepts the names produced by scheme_name; ConfigError otherwise.
Scheme parse_scheme(std::string_view name);
bool is_rbm(Scheme s);
bool is_milstein(Scheme s);

struct FixedBatch {
  std::size_t size = 2;
};
/// P = Delta^-beta, capped at N and moved to the nearest divisor of N in [2, N].
struct PowerLawBatch {
  double beta = 1.0;
};
using BatchRule = std::variant<FixedBatch, PowerLawBatch>;

/// How interaction sums are evaluated. Auto uses the separable O(N) form when
/// the kernel offers one; Pairwise always loops over particle pairs.
enum class Summation { Auto, Pairwise };

/// Divisor of n in [2, n] nearest to target (ties go to the smaller divisor).
std::size_t nearest_divisor(std::size_t n, double target);

struct SolverConfig {
  Scheme scheme = Scheme::TruncatedEM_Full;
  double delta = 0.0;
  double horizon = 1.0;
  std::size_t n_particles = 0;
  BatchRule batch_rule = FixedBatch{2};
  bool exclude_self = true;
  Summation summation = Summation::Auto;
  /// Record the state every `checkpoint_stride` steps (0 = terminal only).
  std::size_t checkpoint_stride = 0;

  std::size_t steps() const;
  /// Adjusted P for RBM schemes, N for full schemes.
  std::size_t batch_size() const;
  void validate(const McKeanModel& model) const;
};

/**
 * @brief Advances a whole ensemble by one step.
 *
 * Reads only the pre-step state (synchronous update). Buffers are reused
 * across calls, so one Stepper per thread.
 */
class Stepper {
 public:
  Stepper(const McKeanModel& model, const TruncationSpec& truncation, Scheme scheme,
          double delta, bool exclude_self = true, Summation summation = Summation::Auto);

  /// `noise` holds Delta W row-major (N x m'). `partition` is required for RBM schemes.
  void advance(const EnsembleState& in, std::span<const double> noise,
               const BatchPartition* partition, EnsembleState& out);

  double radius() const { return radius_; }

 private:
  struct Scope {
    std::span<const double> rows;  // positions the interaction averages over
    std::size_t self;              // row of the particle itself, or kNoIndex
    double weight;                 // 1 / (number of summed rows)
    std::span<const double> drift_totals;      // separable totals over rows, may be empty
    std::span<const double> diffusion_totals;  // likewise for the diffusion kernel
  };

  void update_particle(std::span<const double> x, const Scope& scope,
                       std::span<const double> dW, std::span<double> out);
  void totals_for(std::span<const double> rows);

  const McKeanModel& model_;
  Scheme scheme_;
  double delta_;
  bool exclude_self_;
  double radius_;
  const SeparableKernel* drift_separable_ = nullptr;
  const SeparableKernel* diffusion_separable_ = nullptr;
  const StateOnlyDiffusion* state_diffusion_ = nullptr;
  const PairKernel* diffusion_kernel_ = nullptr;

  std::vector<double> xbar_, drift_, mean_, wrapped_, sigma_, feature_, gathered_;
  std::vector<double> drift_totals_, diffusion_totals_;
};

EnsembleState step_full_em(const EnsembleState& state, const McKeanModel& model,
                           const TruncationSpec& spec, double delta,
                           std::span<const double> noise, bool exclude_self = true,
                           Summation summation = Summation::Auto);

EnsembleState step_rbm_em(const EnsembleState& state, const McKeanModel& model,
                          const TruncationSpec& spec, double delta, std::span<const double> noise,
                          const BatchPartition& partition,
                          Summation summation = Summation::Auto);

/// Scalar truncated Milstein with full interaction; ConfigError unless the model supports it.
EnsembleState step_milstein(const EnsembleState& state, const McKeanModel& model,
                            const TruncationSpec& spec, double delta,
                            std::span<const double> noise, bool exclude_self = true);

/// Tamed drift v / (1 + delta |v|), untruncated coefficients.
EnsembleState step_tamed_em(const EnsembleState& state, const McKeanModel& model, double delta,
                            std::span<const double> noise, bool exclude_self = true);

/// Initial ensemble drawn from the model's initial law with rng_stream(initial, path, 0).
EnsembleState initial_ensemble(const McKeanModel& model, const NoiseSpec& noise,
                               std::uint64_t path_id);

struct Trajectory {
  EnsembleState terminal;
  std::vector<EnsembleState> checkpoints;
  bool diverged = false;
  std::int64_t diverged_step = -1;  ///< first step index whose result was non-finite
  std::size_t batch_size = 0;
};

/// One solver in a coupled run. Each member may carry its own truncation.
struct CoupledMember {
  SolverConfig config;
  TruncationSpec truncation;
};

/**
 * Runs every member over the same fine Brownian increments and initial state.
 * Member k sums L_k = delta_k / finest_delta fine increments per step, in
 * fine-step order, so the increments match coarse_increment bit for bit.
 * RBM members draw a fresh partition from rng_stream(partition, path, m) at step m.
 */
std::vector<Trajectory> run_coupled(std::span<const CoupledMember> members,
                                    const McKeanModel& model, const NoiseSpec& noise,
                                    std::uint64_t path_id);

Trajectory simulate(const SolverConfig& config, const McKeanModel& model,
                    const TruncationSpec& spec, const NoiseSpec& noise, std::uint64_t path_id);

struct CoupledPair {
  Trajectory reference;
  Trajectory test;
};

CoupledPair simulate_coupled(const SolverConfig& reference, const SolverConfig& test,
                             const McKeanModel& model, const TruncationSpec& spec,
                             const NoiseSpec& noise, std::uint64_t path_id);

}  // namespace mkv
