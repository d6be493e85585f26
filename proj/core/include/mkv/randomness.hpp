#pragma once

#include <array>
#include <cstdint>

#include "mkv/common.hpp"

namespace mkv {

/// Philox4x64-10 block function (Salmon et al., SC'11). Pure: (counter, key) -> 256 bits.
using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;
PhiloxCounter philox4x64(PhiloxCounter counter, PhiloxKey key);

/// Maps a 64-bit word to (0, 1]: ((w >> 11) + 1) * 2^-53.
inline double to_unit_open_low(std::uint64_t w) {
  return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

/// Box-Muller on two blocks of 64 bits: (w0, w1) -> z0, z1 and (w2, w3) -> z2, z3.
std::array<double, 4> normals_from_block(const PhiloxCounter& block);

/**
 * @brief Layout of the Brownian noise of one experiment.
 *
 * Every fine increment is a pure function of
 * (master_seed, path_id, particle_id, fine_step_index), so paths and particles
 * can be generated in any order or in parallel.
 */
struct NoiseSpec {
  std::uint64_t master_seed = 0;
  std::size_t n_particles = 0;
  std::size_t dim_noise = 1;
  double finest_delta = 0.0;
  double horizon = 1.0;

  /// T / finest_delta; ConfigError if not a positive integer.
  std::size_t fine_steps() const;
  /// coarse_delta / finest_delta; ConfigError if not a positive integer.
  std::size_t ratio(double coarse_delta) const;
  void validate() const;
};

/// Exactly-integer check for grid ratios, tolerant of binary rounding only.
std::size_t integer_ratio(double numerator, double denominator, const char* what);

/// Delta W for one particle over one fine step: N(0, finest_delta I_{m'}).
std::vector<double> brownian_increment(const NoiseSpec& spec, std::uint64_t path_id,
                                       std::size_t particle_id, std::size_t fine_step_index);

/**
 * Increments for fine steps [4 * chunk, 4 * chunk + 4) of one particle,
 * step-major, m' components per step: out.size() == 4 * m'. Values are
 * identical to brownian_increment for the same indices.
 */
void brownian_chunk(const NoiseSpec& spec, std::uint64_t path_id, std::size_t particle_id,
                    std::size_t chunk_index, std::span<double> out);

/// Sum, in fine-step order starting from 0.0, of the L fine increments under one coarse step.
std::vector<double> coarse_increment(const NoiseSpec& spec, std::uint64_t path_id,
                                     std::size_t particle_id, std::size_t coarse_step_index,
                                     double coarse_delta);

enum class StreamPurpose : std::uint64_t { partition = 1, initial = 2 };

/**
 * @brief Deterministic stream keyed by (seed, purpose, path, step).
 *
 * Satisfies UniformRandomBitGenerator. Brownian increments use a separate
 * key word, so streams of any purpose are independent of the noise.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t master_seed, StreamPurpose purpose, std::uint64_t path_id,
               std::uint64_t step_index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();
  /// Uniform on (0, 1].
  double uniform() { return to_unit_open_low((*this)()); }
  /// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound);
  double normal();

 private:
  PhiloxKey key_;
  PhiloxCounter counter_;
  PhiloxCounter block_{};
  unsigned used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

RandomStream rng_stream(const NoiseSpec& spec, StreamPurpose purpose, std::uint64_t path_id,
                        std::uint64_t step_index);

}  // namespace mkv
