#include "mkv/batching.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "mkv/randomness.hpp"

namespace mkv {

BatchPartition::BatchPartition(std::size_t n_particles, std::size_t batch_size,
                               std::vector<std::uint32_t> members)
    : n_(n_particles), p_(batch_size), members_(std::move(members)) {
  check_batch_shape(n_, p_);
  if (members_.size() != n_) throw UsageError("partition must list every particle once");
  // Canonical form: sort inside batches, then order batches by first member.
  const std::size_t nb = n_ / p_;
  for (std::size_t b = 0; b < nb; ++b)
    std::sort(members_.begin() + static_cast<std::ptrdiff_t>(b * p_),
              members_.begin() + static_cast<std::ptrdiff_t>((b + 1) * p_));
  std::vector<std::size_t> order(nb);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [this](std::size_t a, std::size_t b) { return members_[a * p_] < members_[b * p_]; });
  bool already_sorted = true;
  for (std::size_t b = 0; b < nb; ++b) already_sorted &= (order[b] == b);
  if (!already_sorted) {
    std::vector<std::uint32_t> reordered;
    reordered.reserve(n_);
    for (std::size_t b : order)
      reordered.insert(reordered.end(), members_.begin() + static_cast<std::ptrdiff_t>(b * p_),
                       members_.begin() + static_cast<std::ptrdiff_t>((b + 1) * p_));
    members_ = std::move(reordered);
  }
  assignment_.assign(n_, static_cast<std::uint32_t>(-1));
  slot_.assign(n_, 0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t s = 0; s < p_; ++s) {
      const std::uint32_t i = members_[b * p_ + s];
      if (i >= n_ || assignment_[i] != static_cast<std::uint32_t>(-1))
        throw UsageError("partition must list every particle once");
      assignment_[i] = static_cast<std::uint32_t>(b);
      slot_[i] = static_cast<std::uint32_t>(s);
    }
  }
}

void check_batch_shape(std::size_t n_particles, std::size_t batch_size) {
  if (batch_size < 2 || n_particles == 0 || n_particles % batch_size != 0) {
    std::ostringstream os;
    os << "batch size P = " << batch_size << " must be >= 2 and divide N = " << n_particles;
    throw ConfigError(os.str());
  }
}

BatchPartition sample_partition(std::size_t n_particles, std::size_t batch_size,
                                RandomStream& stream) {
  check_batch_shape(n_particles, batch_size);
  std::vector<std::uint32_t> perm(n_particles);
  std::iota(perm.begin(), perm.end(), 0u);
  if (batch_size < n_particles) {
    for (std::size_t k = n_particles - 1; k > 0; --k) {
      const auto j = static_cast<std::size_t>(stream.below(k + 1));
      std::swap(perm[k], perm[j]);
    }
  }
  return BatchPartition(n_particles, batch_size, std::move(perm));
}

double partition_count(std::size_t n_particles, std::size_t batch_size) {
  check_batch_shape(n_particles, batch_size);
  // prod over batches of C(remaining - 1, P - 1): the lowest remaining particle
  // opens a batch and picks its P - 1 mates.
  double total = 1.0;
  for (std::size_t remaining = n_particles; remaining > 0; remaining -= batch_size) {
    double c = 1.0;
    for (std::size_t k = 1; k < batch_size; ++k)
      c = c * static_cast<double>(remaining - k) / static_cast<double>(k);
    total *= std::round(c);
  }
  return total;
}

namespace {

void enumerate_into(std::vector<std::uint32_t>& remaining, std::vector<std::uint32_t>& current,
                    std::size_t n, std::size_t p, std::vector<BatchPartition>& out) {
  if (remaining.empty()) {
    out.emplace_back(n, p, current);
    return;
  }
  const std::uint32_t head = remaining.front();
  const std::size_t r = remaining.size();
  // Choose P-1 mates out of remaining[1..r) as index combinations.
  std::vector<std::size_t> pick(p - 1);
  std::iota(pick.begin(), pick.end(), std::size_t{1});
  while (true) {
    current.push_back(head);
    for (std::size_t k : pick) current.push_back(remaining[k]);
    std::vector<std::uint32_t> rest;
    rest.reserve(r - p);
    for (std::size_t k = 1, t = 0; k < r; ++k) {
      if (t < pick.size() && pick[t] == k) {
        ++t;
        continue;
      }
      rest.push_back(remaining[k]);
    }
    enumerate_into(rest, current, n, p, out);
    current.resize(current.size() - p);

    // Next combination in lexicographic order.
    std::size_t k = pick.size();
    while (k > 0 && pick[k - 1] == r - pick.size() + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t t = k; t < pick.size(); ++t) pick[t] = pick[t - 1] + 1;
  }
}

}  // namespace

std::vector<BatchPartition> enumerate_partitions(std::size_t n_particles, std::size_t batch_size) {
  const double count = partition_count(n_particles, batch_size);
  if (count > kEnumerationGuard) {
    std::ostringstream os;
    os << "enumerating " << count << " partitions exceeds the guard of " << kEnumerationGuard;
    throw UsageError(os.str());
  }
  std::vector<BatchPartition> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::uint32_t> all(n_particles);
  std::iota(all.begin(), all.end(), 0u);
  std::vector<std::uint32_t> current;
  current.reserve(n_particles);
  enumerate_into(all, current, n_particles, batch_size, out);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> chi_deviation(const EnsembleState& config, const PairKernel& kernel,
                                  const BatchPartition& partition, std::size_t i) {
  const std::size_t n = config.size();
  const std::size_t d = config.dim();
  if (n < 2) throw UsageError("chi_deviation needs N >= 2");
  if (partition.n_particles() != n) throw UsageError("partition size does not match the ensemble");
  const std::size_t r = kernel.value_dim();
  const std::size_t p = partition.batch_size();

  std::vector<double> full(r), local(r);
  kernel.sum_rows(config[i], config.positions(), i, full);

  std::vector<double> rows(p * d);
  const auto batch = partition.batch(partition.batch_of(i));
  for (std::size_t s = 0; s < p; ++s) {
    const auto x = config[batch[s]];
    std::copy(x.begin(), x.end(), rows.begin() + static_cast<std::ptrdiff_t>(s * d));
  }
  kernel.sum_rows(config[i], rows, partition.slot_of(i), local);

  std::vector<double> chi(r);
  for (std::size_t c = 0; c < r; ++c)
    chi[c] = local[c] / static_cast<double>(p - 1) - full[c] / static_cast<double>(n - 1);
  return chi;
}

double lambda_statistic(const EnsembleState& config, const PairKernel& kernel, std::size_t i) {
  const std::size_t n = config.size();
  if (n < 3) throw UsageError("lambda_statistic needs N >= 3");
  const std::size_t r = kernel.value_dim();
  std::vector<double> mean(r), value(r);
  kernel.sum_rows(config[i], config.positions(), i, mean);
  for (double& v : mean) v /= static_cast<double>(n - 1);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    kernel.evaluate(config[i], config[j], value);
    double sq = 0.0;
    for (std::size_t c = 0; c < r; ++c) sq += (value[c] - mean[c]) * (value[c] - mean[c]);
    total += sq;
  }
  return total / static_cast<double>(n - 2);
}

ChiMomentReport verify_chi_moments(const EnsembleState& config, const PairKernel& kernel,
                                   std::size_t i, std::size_t batch_size) {
  const std::size_t n = config.size();
  const auto partitions = enumerate_partitions(n, batch_size);
  const std::size_t r = kernel.value_dim();
  const double weight = 1.0 / static_cast<double>(partitions.size());

  std::vector<std::vector<double>> samples;
  samples.reserve(partitions.size());
  std::vector<double> mean(r, 0.0);
  for (const auto& part : partitions) {
    samples.push_back(chi_deviation(config, kernel, part, i));
    for (std::size_t c = 0; c < r; ++c) mean[c] += weight * samples.back()[c];
  }
  double variance = 0.0;
  for (const auto& s : samples)
    for (std::size_t c = 0; c < r; ++c) variance += weight * (s[c] - mean[c]) * (s[c] - mean[c]);

  ChiMomentReport report;
  report.partitions = partitions.size();
  report.mean_error = norm2(mean);
  report.variance_lhs = variance;
  const double factor =
      1.0 / static_cast<double>(batch_size - 1) - 1.0 / static_cast<double>(n - 1);
  report.variance_rhs = (n >= 3) ? factor * lambda_statistic(config, kernel, i) : 0.0;
  return report;
}

double indicator_product_expectation(std::size_t n_particles, std::size_t batch_size,
                                     std::size_t q) {
  if (q >= n_particles) throw UsageError("q must be smaller than N");
  double product = 1.0;
  for (std::size_t j = 1; j <= q; ++j) {
    if (batch_size <= j) return 0.0;
    product *= static_cast<double>(batch_size - j) / static_cast<double>(n_particles - j);
  }
  return product;
}

double indicator_product_frequency(std::size_t n_particles, std::size_t batch_size,
                                   std::size_t q) {
  if (q >= n_particles) throw UsageError("q must be smaller than N");
  const auto partitions = enumerate_partitions(n_particles, batch_size);
  std::size_t hits = 0;
  for (const auto& part : partitions) {
    const std::size_t home = part.batch_of(0);
    bool all = true;
    for (std::size_t j = 1; j <= q; ++j) all &= (part.batch_of(j) == home);
    hits += all ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(partitions.size());
}

FourthMomentReport chi_fourth_moment_scaling(const EnsembleState& config,
                                             const PairKernel& kernel, std::size_t i,
                                             std::span<const std::size_t> batch_sizes,
                                             std::size_t samples, std::uint64_t seed) {
  const std::size_t n = config.size();
  const std::size_t r = kernel.value_dim();
  FourthMomentReport report;

  std::vector<double> value(r);
  for (std::size_t j = 0; j < n; ++j) {
    kernel.evaluate(config[i], config[j], value);
    const double a = norm2(value);
    double power = 1.0;
    for (int q = 0; q < 4; ++q) {
      power *= a;
      report.M[q] += power / static_cast<double>(n);
    }
  }
  const auto& M = report.M;
  report.Q = M[0] * M[0] * M[0] * M[0] + M[1] * M[0] * M[0] + M[1] * M[1] + M[2] * M[0] + M[3];

  for (std::size_t p : batch_sizes) {
    check_batch_shape(n, p);
    RandomStream stream(seed, StreamPurpose::partition, p, 0);
    double sum = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const auto part = sample_partition(n, p, stream);
      const auto chi = chi_deviation(config, kernel, part, i);
      double sq = 0.0;
      for (double c : chi) sq += c * c;
      sum += sq * sq;
    }
    FourthMomentRow row;
    row.batch_size = p;
    row.fourth_moment = samples ? sum / static_cast<double>(samples) : 0.0;
    row.scaled = report.Q > 0.0 ? row.fourth_moment * static_cast<double>(p * p) / report.Q : 0.0;
    if (!report.rows.empty() && row.fourth_moment > 0.0)
      row.decrease = report.rows.back().fourth_moment / row.fourth_moment;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace mkv
