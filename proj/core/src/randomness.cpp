#include "mkv/randomness.hpp"

#include <numbers>
#include <sstream>

namespace mkv {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

__extension__ typedef unsigned __int128 u128;

// Key word 1 for Brownian increments; stream purposes use their enum value.
constexpr std::uint64_t kBrownianTag = 0;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const u128 p = static_cast<u128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

PhiloxCounter philox4x64(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::array<double, 4> normals_from_block(const PhiloxCounter& b) {
  std::array<double, 4> z{};
  for (int pair = 0; pair < 2; ++pair) {
    const double u1 = to_unit_open_low(b[2 * pair]);
    const double u2 = to_unit_open_low(b[2 * pair + 1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    z[2 * pair] = r * std::cos(theta);
    z[2 * pair + 1] = r * std::sin(theta);
  }
  return z;
}

// ---------------------------------------------------------------------------

std::size_t integer_ratio(double numerator, double denominator, const char* what) {
  const double q = numerator / denominator;
  const double r = std::round(q);
  if (!(r >= 1.0) || std::fabs(q - r) > 1e-9 * r) {
    std::ostringstream os;
    os << what << ": " << numerator << " / " << denominator << " is not a positive integer";
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(r);
}

std::size_t NoiseSpec::fine_steps() const {
  return integer_ratio(horizon, finest_delta, "horizon / finest_delta");
}

std::size_t NoiseSpec::ratio(double coarse_delta) const {
  return integer_ratio(coarse_delta, finest_delta, "coarse_delta / finest_delta");
}

void NoiseSpec::validate() const {
  if (n_particles == 0) throw ConfigError("noise: n_particles must be positive");
  if (dim_noise == 0) throw ConfigError("noise: dim_noise must be positive");
  if (!(finest_delta > 0.0)) throw ConfigError("noise: finest_delta must be positive");
  if (!(horizon > 0.0)) throw ConfigError("noise: horizon must be positive");
  (void)fine_steps();
}

void brownian_chunk(const NoiseSpec& spec, std::uint64_t path_id, std::size_t particle_id,
                    std::size_t chunk_index, std::span<double> out) {
  const std::size_t m = spec.dim_noise;
  const double scale = std::sqrt(spec.finest_delta);
  const PhiloxKey key{spec.master_seed, kBrownianTag};
  // Lane l = step * m' + component; block = l / 4. A chunk of four steps covers
  // exactly m' consecutive blocks starting at chunk_index * m'.
  for (std::size_t b = 0; b < m; ++b) {
    const PhiloxCounter ctr{path_id, particle_id, chunk_index * m + b, 0};
    const auto z = normals_from_block(philox4x64(ctr, key));
    for (std::size_t l = 0; l < 4; ++l) out[4 * b + l] = scale * z[l];
  }
}

std::vector<double> brownian_increment(const NoiseSpec& spec, std::uint64_t path_id,
                                       std::size_t particle_id, std::size_t fine_step_index) {
  if (particle_id >= spec.n_particles) throw UsageError("particle_id out of range");
  if (fine_step_index >= spec.fine_steps()) throw UsageError("fine_step_index out of range");
  const std::size_t m = spec.dim_noise;
  std::vector<double> chunk(4 * m);
  brownian_chunk(spec, path_id, particle_id, fine_step_index / 4, chunk);
  const std::size_t offset = (fine_step_index % 4) * m;
  return {chunk.begin() + static_cast<std::ptrdiff_t>(offset),
          chunk.begin() + static_cast<std::ptrdiff_t>(offset + m)};
}

std::vector<double> coarse_increment(const NoiseSpec& spec, std::uint64_t path_id,
                                     std::size_t particle_id, std::size_t coarse_step_index,
                                     double coarse_delta) {
  const std::size_t L = spec.ratio(coarse_delta);
  std::vector<double> sum(spec.dim_noise, 0.0);
  for (std::size_t s = 0; s < L; ++s) {
    const auto w = brownian_increment(spec, path_id, particle_id, coarse_step_index * L + s);
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += w[c];
  }
  return sum;
}

// ---------------------------------------------------------------------------

RandomStream::RandomStream(std::uint64_t master_seed, StreamPurpose purpose,
                           std::uint64_t path_id, std::uint64_t step_index)
    : key_{master_seed, static_cast<std::uint64_t>(purpose)},
      counter_{path_id, step_index, 0, 0} {}

RandomStream::result_type RandomStream::operator()() {
  if (used_ == 4) {
    block_ = philox4x64(counter_, key_);
    ++counter_[2];
    used_ = 0;
  }
  return block_[used_++];
}

std::uint64_t RandomStream::below(std::uint64_t bound) {
  if (bound == 0) throw UsageError("below(0)");
  u128 m = static_cast<u128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

RandomStream rng_stream(const NoiseSpec& spec, StreamPurpose purpose, std::uint64_t path_id,
                        std::uint64_t step_index) {
  return RandomStream(spec.master_seed, purpose, path_id, step_index);
}

}  // namespace mkv
