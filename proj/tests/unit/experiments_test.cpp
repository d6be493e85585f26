#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "mkv/experiments.hpp"

using namespace mkv;

namespace {

std::filesystem::path out_dir(const std::string& name) {
  const auto p = std::filesystem::path(MKV_TEST_OUT) / name;
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool logged(const ExperimentOutcome& o, const std::string& needle) {
  for (const auto& l : o.log)
    if (l.find(needle) != std::string::npos) return true;
  return false;
}

const char* kSmallConverge = R"([run]
experiment = converge
model = linear-diffusion-interaction
seed = 5
particles = 16
paths = 6
deltas = 2^-6, 2^-5, 2^-4
[reference]
scheme = tamed-em
delta = 2^-8
alternative = truncated-em
)";

}  // namespace

TEST(ValidationSuite, AllIdentitiesHold) {
  const auto rows = validation_suite(ValidateSettings{}, 1);
  ASSERT_FALSE(rows.empty());
  std::size_t mean = 0, variance = 0, cobatch = 0, count = 0;
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pass) << r.check << " " << r.kernel << " N=" << r.n << " P=" << r.p;
    mean += r.check == "chi-mean";
    variance += r.check == "chi-variance";
    cobatch += r.check == "co-batch";
    count += r.check == "count";
  }
  EXPECT_GT(mean, 0u);
  EXPECT_EQ(mean, variance);
  EXPECT_GT(cobatch, 0u);
  EXPECT_GT(count, 0u);
}

TEST(ValidationSuite, DetectsWrongVarianceFormula) {
  const auto wrong = [](std::size_t n, std::size_t p, double lambda) {
    return (1.0 / static_cast<double>(p) - 1.0 / static_cast<double>(n)) * lambda;
  };
  const auto rows = validation_suite(ValidateSettings{}, 1, wrong);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += (r.check == "chi-variance" && !r.pass);
  EXPECT_GT(failed, 0u);
}

TEST(BatchVariance, Formula) {
  EXPECT_DOUBLE_EQ(batch_variance(4, 2, 1.0), 1.0 - 1.0 / 3.0);
  EXPECT_EQ(batch_variance(6, 6, 2.0), 0.0);
}

TEST(RunConverge, ZeroModelWarns) {
  auto config = parse_config(
      "[run]\nexperiment = converge\nmodel = zero\nparticles = 8\npaths = 2\n"
      "deltas = 2^-5, 2^-4\n[reference]\nscheme = truncated-em\ndelta = 2^-6\n");
  config.out_dir = out_dir("zero");
  const auto o = run_converge(config, "zero");
  EXPECT_EQ(o.exit_code, exit_code::kWarning);
  ASSERT_EQ(o.reports.size(), 1u);
  for (const auto& row : o.reports[0].rows) EXPECT_EQ(row.rms_error, 0.0);
  EXPECT_FALSE(o.reports[0].slope.has_value());
}

TEST(RunConverge, SingleDeltaHasNoSlope) {
  auto config = parse_config(
      "[run]\nexperiment = converge\nparticles = 8\npaths = 2\ndeltas = 2^-4\n"
      "[reference]\nscheme = truncated-em\ndelta = 2^-6\n");
  config.out_dir = out_dir("single");
  const auto o = run_converge(config, "single");
  EXPECT_EQ(o.exit_code, exit_code::kWarning);
  EXPECT_FALSE(o.reports[0].slope.has_value());
  EXPECT_EQ(o.reports[0].rows.size(), 1u);
}

TEST(RunConverge, CsvIdenticalAcrossThreadCounts) {
  auto one = parse_config(kSmallConverge);
  one.out_dir = out_dir("threads1");
  auto two = one;
  two.threads = 2;
  two.out_dir = out_dir("threads2");
  const auto a = run_converge(one, kSmallConverge);
  const auto b = run_converge(two, kSmallConverge);
  ASSERT_EQ(a.files.size(), b.files.size());
  ASSERT_GE(a.files.size(), 3u);
  for (std::size_t k = 0; k < a.files.size(); ++k) {
    EXPECT_EQ(a.files[k].filename(), b.files[k].filename());
    EXPECT_EQ(slurp(a.files[k]), slurp(b.files[k])) << a.files[k];
  }
  EXPECT_EQ(a.exit_code, b.exit_code);
}

TEST(RunConverge, CsvHeaderAndColumns) {
  auto config = parse_config(kSmallConverge);
  config.out_dir = out_dir("header");
  const auto o = run_converge(config, kSmallConverge);
  const auto text = slurp(config.out_dir / "convergence.csv");
  std::istringstream lines(text);
  std::string header, columns, row;
  std::getline(lines, header);
  std::getline(lines, columns);
  EXPECT_TRUE(std::regex_match(header, std::regex(R"(# mkv \S+ seed=5 config=[0-9a-f]{16})")))
      << header;
  EXPECT_EQ(columns, "delta,error,paths,diverged,P");
  std::size_t rows = 0;
  while (std::getline(lines, row)) ++rows;
  EXPECT_EQ(rows, 3u);
  ASSERT_TRUE(o.reports[0].slope.has_value());
  EXPECT_TRUE(std::filesystem::exists(config.out_dir / "slopes.csv"));
  EXPECT_TRUE(std::filesystem::exists(config.out_dir / "moments.csv"));
}

TEST(RunConverge, SmallRadiusIsLogged) {
  auto config = parse_config(std::string(kSmallConverge) + "[truncation]\nK = 1e9\n");
  config.out_dir = out_dir("radius");
  const auto o = run_converge(config, "radius");
  EXPECT_TRUE(logged(o, "truncation radius"));
}

TEST(RunConverge, SlopeBoundsDecideExitCode) {
  auto config = parse_config(std::string(kSmallConverge) + "[criteria]\nslope_min = 5\n");
  config.out_dir = out_dir("bounds");
  EXPECT_EQ(run_converge(config, "bounds").exit_code, exit_code::kCriterion);
}

TEST(RunRbmSweep, WritesOneFilePerBeta) {
  auto config = parse_config(
      "[run]\nexperiment = rbm-sweep\nparticles = 16\npaths = 3\ndeltas = 2^-5, 2^-4\n"
      "[scheme]\nname = truncated-em-rbm\nbetas = 1, 1/2\n"
      "[reference]\nscheme = truncated-em\ndelta = 2^-7\n");
  config.out_dir = out_dir("sweep");
  const auto o = run_rbm_sweep(config, "sweep");
  EXPECT_EQ(o.reports.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(config.out_dir / "convergence_beta1.csv"));
  EXPECT_TRUE(std::filesystem::exists(config.out_dir / "convergence_beta0.5.csv"));
  EXPECT_EQ(o.reports[0].rows[0].batch_size, 16u);  // 2^5 capped at N
  EXPECT_EQ(o.reports[1].rows[0].batch_size, 4u);   // 2^2.5 = 5.66, tie-free nearest is 4
}

TEST(RunValidate, PassesAndWritesCsv) {
  auto config = parse_config("[run]\nexperiment = validate\n");
  config.out_dir = out_dir("validate");
  const auto o = run_validate(config, "validate");
  EXPECT_EQ(o.exit_code, exit_code::kSuccess);
  EXPECT_TRUE(std::filesystem::exists(config.out_dir / "validation.csv"));
}

TEST(RunChaos, WritesCsv) {
  auto config = parse_config(
      "[run]\nexperiment = chaos\nmodel = zero\npaths = 2\n[chaos]\nparticles = 4, 8\ndelta = 2^-3\n");
  config.out_dir = out_dir("chaos");
  const auto o = run_chaos(config, "chaos");
  EXPECT_EQ(o.exit_code, exit_code::kSuccess);
  EXPECT_TRUE(std::filesystem::exists(config.out_dir / "chaos.csv"));
}

TEST(Version, StartsWithName) { EXPECT_EQ(version_string().rfind("mkv ", 0), 0u); }
