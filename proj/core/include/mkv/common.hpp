#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mkv {

/// Invalid or inconsistent configuration (bad step size, P not dividing N, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An API was called outside its documented preconditions.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model fields are inconsistent with the declared dimensions.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/**
 * @brief Positions of N particles in R^d at time index m.
 *
 * Storage is row-major: particle i occupies [i*d, (i+1)*d).
 */
class EnsembleState {
 public:
  EnsembleState() = default;
  EnsembleState(std::size_t n_particles, std::size_t dim, double fill = 0.0)
      : n_(n_particles), dim_(dim), positions_(n_particles * dim, fill) {}

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }

  std::span<double> operator[](std::size_t i) { return {positions_.data() + i * dim_, dim_}; }
  std::span<const double> operator[](std::size_t i) const {
    return {positions_.data() + i * dim_, dim_};
  }

  std::span<double> positions() { return positions_; }
  std::span<const double> positions() const { return positions_; }

  bool all_finite() const {
    for (double v : positions_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const EnsembleState&) const = default;

  std::int64_t time_index = 0;

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> positions_;
};

/// Euclidean norm.
inline double norm2(std::span<const double> v) {
  if (v.size() == 1) return std::fabs(v[0]);
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/**
 * Sum of a strided sequence in a fixed order: element j goes to lane j mod 4,
 * lanes are combined as (l0 + l1) + (l2 + l3). Element `skip` is left out.
 * Every interaction sum in the library goes through this so that results do
 * not depend on threading and a single full batch reproduces the full sum.
 */
inline double ordered_sum(const double* data, std::size_t count, std::size_t stride,
                          std::size_t skip = kNoIndex) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 4 <= count; j += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double v = (j + l == skip) ? 0.0 : data[(j + l) * stride];
      lane[l] += v;
    }
  }
  for (; j < count; ++j) {
    if (j != skip) lane[j & 3] += data[j * stride];
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace mkv
