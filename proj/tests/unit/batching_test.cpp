#include <gtest/gtest.h>

#include <map>
#include <set>

#include "mkv/batching.hpp"
#include "mkv/randomness.hpp"

using namespace mkv;

namespace {

EnsembleState line(std::initializer_list<double> v) {
  EnsembleState s(v.size(), 1);
  std::size_t i = 0;
  for (double x : v) s[i++][0] = x;
  return s;
}

EnsembleState random_line(std::size_t n, std::uint64_t seed) {
  RandomStream r(seed, StreamPurpose::initial, 0, 0);
  EnsembleState s(n, 1);
  for (std::size_t i = 0; i < n; ++i) s[i][0] = r.normal();
  return s;
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

void expect_valid(const BatchPartition& part, std::size_t n, std::size_t p) {
  ASSERT_EQ(part.n_particles(), n);
  ASSERT_EQ(part.batch_size(), p);
  std::vector<int> seen(n, 0);
  std::vector<std::size_t> sizes(n / p, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++sizes[part.batch_of(i)];
    EXPECT_EQ(part.batch(part.batch_of(i))[part.slot_of(i)], i);
  }
  for (auto m : part.members()) ++seen[m];
  for (int c : seen) EXPECT_EQ(c, 1);
  for (auto s : sizes) EXPECT_EQ(s, p);
}

}  // namespace

TEST(BatchPartition, RejectsBadShapes) {
  RandomStream r(1, StreamPurpose::partition, 0, 0);
  EXPECT_THROW(sample_partition(6, 4, r), ConfigError);
  EXPECT_THROW(sample_partition(6, 1, r), ConfigError);
  EXPECT_THROW(sample_partition(6, 0, r), ConfigError);
  EXPECT_THROW(BatchPartition(4, 2, {0, 1, 1, 3}), UsageError);
  EXPECT_THROW(BatchPartition(4, 2, {0, 1, 2}), UsageError);
}

TEST(BatchPartition, CanonicalForm) {
  const BatchPartition a(6, 2, {5, 3, 1, 0, 4, 2});
  const BatchPartition b(6, 2, {0, 1, 2, 4, 3, 5});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.batch(0)[0], 0u);
  EXPECT_EQ(a.batch(0)[1], 1u);
  EXPECT_EQ(a.batch(1)[0], 2u);
  EXPECT_EQ(a.batch(1)[1], 4u);
  EXPECT_EQ(a.batch_of(3), 2u);
}

TEST(SamplePartition, FullBatchIsDeterministic) {
  RandomStream r(1, StreamPurpose::partition, 0, 0);
  const auto part = sample_partition(5, 5, r);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(part.batch_of(i), 0u);
    EXPECT_EQ(part.slot_of(i), i);
  }
}

TEST(SamplePartition, SampledInvariants) {
  RandomStream r(3, StreamPurpose::partition, 0, 0);
  for (int t = 0; t < 200; ++t) expect_valid(sample_partition(24, 4, r), 24, 4);
  for (int t = 0; t < 50; ++t) expect_valid(sample_partition(1024, 128, r), 1024, 128);
}

TEST(SamplePartition, PairCoBatchProbability) {
  RandomStream r(11, StreamPurpose::partition, 0, 0);
  const int n = 300000;
  int hits = 0;
  for (int t = 0; t < n; ++t) {
    const auto part = sample_partition(4, 2, r);
    hits += part.batch_of(0) == part.batch_of(1) ? 1 : 0;
  }
  const double freq = static_cast<double>(hits) / n;
  EXPECT_NEAR(freq, 1.0 / 3.0, 0.01);
  EXPECT_NEAR(freq, 1.0 / 3.0, 3.0 * std::sqrt((1.0 / 3) * (2.0 / 3) / n));
}

TEST(SamplePartition, PairCoBatchLargerSystem) {
  RandomStream r(12, StreamPurpose::partition, 0, 0);
  const int n = 100000;
  int hits = 0;
  for (int t = 0; t < n; ++t) {
    const auto part = sample_partition(12, 3, r);
    hits += part.batch_of(4) == part.batch_of(9) ? 1 : 0;
  }
  const double p = 2.0 / 11.0;
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(SamplePartition, PartnersUniformChiSquare) {
  RandomStream r(13, StreamPurpose::partition, 0, 0);
  const int n = 150000;
  std::vector<int> counts(6, 0);
  for (int t = 0; t < n; ++t) {
    const auto part = sample_partition(6, 2, r);
    const auto batch = part.batch(part.batch_of(0));
    ++counts[batch[0] == 0 ? batch[1] : batch[0]];
  }
  EXPECT_EQ(counts[0], 0);
  double chi2 = 0.0;
  for (int j = 1; j < 6; ++j) chi2 += std::pow(counts[j] - n / 5.0, 2) / (n / 5.0);
  EXPECT_LT(chi2, 13.28);  // chi^2_4 at 1%
}

TEST(EnumeratePartitions, Counts) {
  EXPECT_EQ(enumerate_partitions(4, 2).size(), 3u);
  EXPECT_EQ(enumerate_partitions(6, 3).size(), 10u);
  EXPECT_EQ(enumerate_partitions(3, 3).size(), 1u);
  for (auto [n, p] : {std::pair{4, 2}, {6, 2}, {6, 3}, {8, 2}, {8, 4}, {9, 3}, {12, 3}}) {
    const double m = static_cast<double>(n / p);
    const double closed = factorial(n) / (std::pow(factorial(p), m) * factorial(n / p));
    EXPECT_EQ(partition_count(n, p), closed);
    const auto all = enumerate_partitions(n, p);
    EXPECT_EQ(static_cast<double>(all.size()), closed);
    std::set<std::vector<std::uint32_t>> distinct;
    for (const auto& part : all) {
      expect_valid(part, n, p);
      distinct.emplace(part.members().begin(), part.members().end());
    }
    EXPECT_EQ(distinct.size(), all.size());
  }
}

TEST(EnumeratePartitions, GuardExceeded) {
  EXPECT_GT(partition_count(24, 2), kEnumerationGuard);
  EXPECT_THROW(enumerate_partitions(24, 2), UsageError);
}

TEST(ChiDeviation, Examples) {
  const auto config = line({0, 1, 2, 3});
  PartnerKernel partner(1);
  const BatchPartition part(4, 2, {0, 1, 2, 3});
  EXPECT_DOUBLE_EQ(chi_deviation(config, partner, part, 0)[0], -1.0);

  const BatchPartition full(4, 4, {0, 1, 2, 3});
  EXPECT_EQ(chi_deviation(config, partner, full, 2)[0], 0.0);

  ConstantKernel constant(1, {3.5});
  EXPECT_EQ(chi_deviation(config, constant, part, 1)[0], 0.0);
}

TEST(LambdaStatistic, Examples) {
  const auto config = line({0, 1, 2, 3});
  EXPECT_DOUBLE_EQ(lambda_statistic(config, PartnerKernel(1), 0), 1.0);
  EXPECT_EQ(lambda_statistic(config, ConstantKernel(1, {2.0}), 0), 0.0);
  EXPECT_THROW(lambda_statistic(line({0, 1}), PartnerKernel(1), 0), UsageError);

  const auto random = random_line(9, 4);
  const double base = lambda_statistic(random, DifferenceKernel(1), 3);
  EXPECT_NEAR(lambda_statistic(random, DifferenceKernel(1, 2.5), 3), 6.25 * base, 1e-12 * base);
}

TEST(ChiMoments, HandEnumeratedExample) {
  const auto config = line({0, 1, 2, 3});
  const auto r = verify_chi_moments(config, PartnerKernel(1), 0, 2);
  EXPECT_EQ(r.partitions, 3u);
  EXPECT_NEAR(r.mean_error, 0.0, 1e-15);
  EXPECT_NEAR(r.variance_lhs, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.variance_rhs, 2.0 / 3.0, 1e-15);
}

TEST(ChiMoments, FullBatchIsZero) {
  const auto config = random_line(6, 1);
  const auto r = verify_chi_moments(config, SinDifferenceKernel(1), 2, 6);
  EXPECT_EQ(r.mean_error, 0.0);
  EXPECT_EQ(r.variance_lhs, 0.0);
  EXPECT_NEAR(r.variance_rhs, 0.0, 1e-15);
}

TEST(ChiMoments, IdentityAcrossCases) {
  const std::vector<std::shared_ptr<PairKernel>> kernels = {
      std::make_shared<PartnerKernel>(1), std::make_shared<DifferenceKernel>(1),
      std::make_shared<SinDifferenceKernel>(1)};
  for (auto [n, p] : {std::pair<std::size_t, std::size_t>{4, 2}, {6, 2}, {6, 3}, {8, 4}}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto config = random_line(n, 100 + seed);
      for (const auto& k : kernels) {
        for (std::size_t i = 0; i < n; i += 3) {
          const auto r = verify_chi_moments(config, *k, i, p);
          EXPECT_LT(r.mean_error, 1e-12);
          EXPECT_NEAR(r.variance_lhs, r.variance_rhs, 1e-12);
        }
      }
    }
  }
}

TEST(IndicatorProduct, Examples) {
  EXPECT_DOUBLE_EQ(indicator_product_expectation(4, 2, 1), 1.0 / 3.0);
  EXPECT_EQ(indicator_product_expectation(4, 2, 2), 0.0);
  EXPECT_EQ(indicator_product_expectation(6, 3, 3), 0.0);
  EXPECT_DOUBLE_EQ(indicator_product_expectation(6, 3, 2), 0.1);
  EXPECT_DOUBLE_EQ(indicator_product_frequency(6, 3, 2), 0.1);
  EXPECT_THROW(indicator_product_expectation(4, 2, 4), UsageError);
}

TEST(IndicatorProduct, EnumerationMatchesFormula) {
  for (auto [n, p] : {std::pair<std::size_t, std::size_t>{4, 2}, {6, 2}, {6, 3}, {8, 4}, {9, 3}})
    for (std::size_t q = 1; q < std::min<std::size_t>(n, 5); ++q)
      EXPECT_NEAR(indicator_product_frequency(n, p, q), indicator_product_expectation(n, p, q),
                  1e-12);
}

TEST(FourthMoment, ConstantKernelAndFullBatch) {
  const auto config = random_line(32, 2);
  const std::size_t sizes[] = {4, 8, 32};
  const auto r = chi_fourth_moment_scaling(config, ConstantKernel(1, {1.0}), 0, sizes, 200, 1);
  for (const auto& row : r.rows) EXPECT_EQ(row.fourth_moment, 0.0);
  const auto d = chi_fourth_moment_scaling(config, DifferenceKernel(1), 0, sizes, 200, 1);
  EXPECT_GT(d.rows[0].fourth_moment, 0.0);
  EXPECT_NEAR(d.rows[2].fourth_moment, 0.0, 1e-28);
}

TEST(FourthMoment, QFromMoments) {
  const auto config = line({0, 1, 2, 3});
  const std::size_t sizes[] = {2};
  const auto r = chi_fourth_moment_scaling(config, PartnerKernel(1), 0, sizes, 10, 1);
  // |k(x_0, x_j)| = j: M_q = (0 + 1 + 2^q + 3^q) / 4.
  const double M1 = 6.0 / 4, M2 = 14.0 / 4, M3 = 36.0 / 4, M4 = 98.0 / 4;
  EXPECT_DOUBLE_EQ(r.M[0], M1);
  EXPECT_DOUBLE_EQ(r.M[3], M4);
  EXPECT_NEAR(r.Q, std::pow(M1, 4) + M2 * M1 * M1 + M2 * M2 + M3 * M1 + M4, 1e-12);
}

TEST(FourthMoment, InverseSquareScaling) {
  const auto config = random_line(256, 8);
  const std::size_t sizes[] = {4, 8, 16, 32};
  const auto r = chi_fourth_moment_scaling(config, DifferenceKernel(1), 0, sizes, 20000, 5);
  for (std::size_t k = 1; k < r.rows.size(); ++k) {
    EXPECT_GE(r.rows[k].decrease, 2.5);
    EXPECT_LE(r.rows[k].decrease, 6.0);
  }
}
