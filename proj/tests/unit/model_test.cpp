#include <gtest/gtest.h>

#include <random>

#include "mkv/model.hpp"
#include "mkv/registry.hpp"

using namespace mkv;

namespace {

TruncationSpec custom(std::function<double(double)> phi, std::function<double(double)> inv,
                      std::function<double(double)> h) {
  TruncationSpec s;
  s.phi = std::move(phi);
  s.phi_inverse = std::move(inv);
  s.h = std::move(h);
  return s;
}

EnsembleState line(std::initializer_list<double> v) {
  EnsembleState s(v.size(), 1);
  std::size_t i = 0;
  for (double x : v) s[i++][0] = x;
  return s;
}

// f = 0, k(x, y) = y, A = identity, sigma = 0.
McKeanModel mean_model() {
  McKeanModel m;
  m.name = "mean";
  m.drift_base = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
  m.drift_kernel = std::make_shared<PartnerKernel>(1);
  m.diffusion = InteractingDiffusion{std::make_shared<DifferenceKernel>(1)};
  m.initial = [](RandomStream&, std::span<double> o) { o[0] = 0.0; };
  return m;
}

}  // namespace

TEST(TruncateState, Examples) {
  double out1[1];
  const double a[] = {0.5};
  truncate_state(a, 1.0, out1);
  EXPECT_EQ(out1[0], 0.5);

  double out2[2];
  const double b[] = {3.0, 4.0};
  truncate_state(b, 1.0, out2);
  EXPECT_DOUBLE_EQ(out2[0], 0.6);
  EXPECT_DOUBLE_EQ(out2[1], 0.8);

  const double zero[] = {0.0, 0.0};
  truncate_state(zero, 2.0, out2);
  EXPECT_EQ(out2[0], 0.0);
  EXPECT_EQ(out2[1], 0.0);
}

TEST(TruncateState, IdempotentAndNormBounded) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 1000; ++t) {
    double x[3] = {5 * n01(gen), 5 * n01(gen), 5 * n01(gen)};
    const double radius = 0.1 + std::fabs(3 * n01(gen));
    double once[3], twice[3];
    truncate_state(x, radius, once);
    truncate_state(once, radius, twice);
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(once[c], twice[c]);
    EXPECT_LE(norm2(once), radius * (1 + 1e-15));
    if (norm2(x) <= radius)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(once[c], x[c]);
    else
      EXPECT_NEAR(once[0] * norm2(x), x[0] * radius, 1e-12 * norm2(x) * radius);
  }
}

TEST(TruncationRadius, ClampsNegativeInverseToZero) {
  // phi(u) = 6 (1 + u)^2, h = delta^(-1/8): phi^-1(2) = sqrt(1/3) - 1 < 0.
  const auto spec = TruncationSpec::polynomial(6.0, 1.0, 1.0, 0.25);
  EXPECT_NEAR(spec.h(0x1p-8), 2.0, 1e-15);
  EXPECT_EQ(truncation_radius(spec, 0x1p-8), 0.0);
}

TEST(TruncationRadius, IdentityAndSquare) {
  const auto sqrt_h = [](double d) { return std::pow(d, -0.5); };
  const auto identity = custom([](double u) { return u; }, [](double v) { return v; }, sqrt_h);
  EXPECT_DOUBLE_EQ(truncation_radius(identity, 0.25), 2.0);
  const auto square =
      custom([](double u) { return u * u; }, [](double v) { return std::sqrt(v); }, sqrt_h);
  EXPECT_DOUBLE_EQ(truncation_radius(square, 1.0 / 16), 2.0);
}

TEST(TruncationRadius, RangeAndMonotonicity) {
  const auto spec = default_truncation({});
  EXPECT_THROW(truncation_radius(spec, 0.0), ConfigError);
  EXPECT_THROW(truncation_radius(spec, 1.5), ConfigError);
  EXPECT_THROW(truncation_radius(spec, -0.1), ConfigError);
  double previous = -1.0;
  for (int p = 0; p <= 14; ++p) {
    const double r = truncation_radius(spec, std::ldexp(1.0, -p));
    EXPECT_GT(r, previous);
    previous = r;
  }
  // Default radius at the coarsest test step stays well above the states reached.
  EXPECT_GT(truncation_radius(spec, 0x1p-7), 10.0);
}

TEST(HDefault, Examples) {
  EXPECT_NEAR(h_default(0x1p-8, 0.25), 2.0, 1e-15);
  EXPECT_EQ(h_default(1.0, 0.1), 1.0);
  EXPECT_NEAR(h_default(0x1p-10, 0.25), std::pow(2.0, 1.25), 1e-12);
  EXPECT_NEAR(h_default(0x1p-10, 0.25), 2.3784, 1e-4);
  EXPECT_THROW(h_default(0.5, 0.0), ConfigError);
  EXPECT_THROW(h_default(0.5, 0.3), ConfigError);
  EXPECT_THROW(h_default(2.0, 0.25), ConfigError);
}

TEST(TruncationSpec, InvariantsHoldForDefaultsAndHDefault) {
  EXPECT_TRUE(default_truncation({}).check_invariants().empty());
  for (double eps : {0.01, 0.1, 0.2, 0.25}) {
    // phi(1) = 1 = h_default(1): the boundary case of h(delta*) >= phi(1).
    const auto spec = TruncationSpec::polynomial(0.25, 1.0, 1.0, eps);
    for (int p = 4; p <= 12; ++p) {
      const double d = std::ldexp(1.0, -p);
      EXPECT_DOUBLE_EQ(spec.h(d), h_default(d, eps));
    }
    EXPECT_TRUE(spec.check_invariants().empty()) << "eps=" << eps;
  }
}

TEST(TruncationSpec, UnscaledDefaultViolatesAnchorCondition) {
  // K = 20 with h = delta^(-1/8): h(1) = 1 < phi(1) = 80.
  const auto spec = TruncationSpec::polynomial(default_phi_constant({}), 1.0, 1.0, 0.25);
  EXPECT_FALSE(spec.check_invariants().empty());
  EXPECT_EQ(truncation_radius(spec, 0x1p-7), 0.0);
}

TEST(TruncationSpec, PhiInverseRoundTrip) {
  const auto spec = default_truncation({});
  for (double v = spec.phi(0.0); v < 1e6; v *= 1.7)
    EXPECT_NEAR(spec.phi(spec.phi_inverse(v)), v, 1e-10 * v);
}

TEST(TamedDrift, Examples) {
  double out[2];
  const double zero[] = {0.0, 0.0};
  tamed_drift(zero, 0.1, out);
  EXPECT_EQ(out[0], 0.0);
  const double big[] = {1e9, 0.0};
  tamed_drift(big, 1e-3, out);
  EXPECT_LE(norm2(out), 1000.0);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_GT(out[0], 0.0);
  const double one[] = {1.0};
  tamed_drift(one, 1.0, out);
  EXPECT_EQ(out[0], 0.5);
}

TEST(TamedDrift, BoundProperty) {
  std::mt19937_64 gen(9);
  std::lognormal_distribution<double> mag(0.0, 5.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const double v[2] = {mag(gen) * u(gen), mag(gen) * u(gen)};
    const double delta = std::ldexp(1.0, -static_cast<int>(t % 14));
    double out[2];
    tamed_drift(v, delta, out);
    EXPECT_LE(norm2(out), std::min(norm2(v), 1.0 / delta) * (1 + 1e-15));
  }
}

TEST(TruncatedDrift, ExampleOneSingleParticle) {
  const auto model = make_model("linear-diffusion-interaction");
  const auto spec = default_truncation({});
  const double x[] = {0.5};
  const auto v = truncated_drift(model, spec, 0x1p-7, x, line({0.5}), 0, false);
  EXPECT_DOUBLE_EQ(v[0], 0.625);
}

TEST(TruncatedDrift, MeanOfEnsemble) {
  const auto model = mean_model();
  const auto spec = TruncationSpec::disabled();
  const double x[] = {0.3};
  EXPECT_DOUBLE_EQ(truncated_drift(model, spec, 0.1, x, line({1, 2, 3}), 0, false)[0], 2.0);
  EXPECT_DOUBLE_EQ(truncated_drift(model, spec, 0.1, x, line({1, 2, 3}), 0, true)[0], 2.5);
}

TEST(TruncatedDrift, BeyondRadiusUsesProjection) {
  const auto model = make_model("linear-diffusion-interaction");
  const auto spec = default_truncation({});
  const double delta = 0x1p-7;
  const double radius = truncation_radius(spec, delta);
  const auto ensemble = line({0.1, -0.4, 2.0});
  const double far[] = {-3.0 * radius}, edge[] = {-radius};
  EXPECT_EQ(truncated_drift(model, spec, delta, far, ensemble, 0, true),
            truncated_drift(model, spec, delta, edge, ensemble, 0, true));
  EXPECT_EQ(truncated_diffusion(model, spec, delta, far, ensemble, 0, true),
            truncated_diffusion(model, spec, delta, edge, ensemble, 0, true));
}

TEST(TruncatedDrift, InsideRadiusEqualsRawCoefficients) {
  const auto model = make_model("nonlinear-sin");
  const auto spec = default_truncation({});
  const auto ensemble = line({0.7, -0.2, 1.3, 0.4});
  const double x[] = {0.7};
  const auto v = truncated_drift(model, spec, 0x1p-8, x, ensemble, 0, true);
  double f[1];
  model.drift_base(x, f);
  const double mean = ((0.7 - -0.2) + (0.7 - 1.3) + (0.7 - 0.4)) / 3.0;
  EXPECT_NEAR(v[0], f[0] + std::sin(mean), 1e-15);
}

TEST(TruncatedDiffusion, Examples) {
  const auto drift_only = make_model("linear-drift-only");
  const auto spec = default_truncation({});
  const double four[] = {4.0};
  EXPECT_EQ(truncated_diffusion(drift_only, spec, 0x1p-7, four, line({4}), 0, false)[0], 8.0);

  const auto model = mean_model();
  const double one[] = {1.0};
  EXPECT_DOUBLE_EQ(
      truncated_diffusion(model, TruncationSpec::disabled(), 0.1, one, line({1, 2, 3}), 0, true)[0],
      -1.5);
}

TEST(TruncatedDrift, DimensionMismatchIsModelError) {
  const auto model = make_model("linear-drift-only");
  const double x[] = {1.0, 2.0};
  EXPECT_THROW(truncated_drift(model, default_truncation({}), 0.1, x, line({1}), 0, false),
               ModelError);
}

TEST(GrowthAudit, Examples) {
  const auto model = make_model("linear-diffusion-interaction");
  const double radii[] = {1.0, 2.0, 4.0};
  std::vector<EnsembleState> probes;
  for (double u : radii) probes.push_back(line({-u, -u / 2, 0.0, u / 2, u}));
  const auto ten = TruncationSpec::polynomial(10.0, 1.0, 1.0, 0.25);
  EXPECT_FALSE(growth_domination_check(model, ten, radii, probes).any_violation());

  const auto identity = custom([](double u) { return u; }, [](double v) { return v; },
                               [](double d) { return 1.0 / d; });
  const double four[] = {4.0};
  const auto audit = growth_domination_check(model, identity, four, probes);
  EXPECT_TRUE(audit.any_violation());
  EXPECT_GT(audit.rows[0].max_drift, 4.0);

  const auto zero = make_model("zero");
  EXPECT_FALSE(growth_domination_check(zero, identity, radii, probes).any_violation());
}

TEST(Registry, ModelsAndMilsteinSupport) {
  for (const auto& name : registered_models()) EXPECT_NO_THROW(make_model(name));
  EXPECT_THROW(make_model("nope"), ConfigError);
  EXPECT_FALSE(make_model("linear-diffusion-interaction").supports_milstein());
  EXPECT_TRUE(make_model("linear-drift-only").supports_milstein());
  EXPECT_TRUE(make_model("nonlinear-sin").supports_milstein());
  EXPECT_EQ(default_phi_constant({}), 20.0);
}

TEST(Registry, DiffusionDerivativeMatchesFiniteDifference) {
  const auto model = make_model("linear-drift-only");
  const auto& sigma = std::get<StateOnlyDiffusion>(model.diffusion).sigma;
  for (double x : {-2.0, -0.5, 0.5, 2.0}) {
    const double h = 1e-5;
    double up[1], down[1];
    const double xp[] = {x + h}, xm[] = {x - h};
    sigma(xp, up);
    sigma(xm, down);
    const double fd = (up[0] - down[0]) / (2 * h);
    EXPECT_NEAR(model.diffusion_derivative(x), fd, 1e-6 * std::fabs(fd));
  }
}

TEST(Model, ValidateRejectsInconsistentDimensions) {
  auto m = mean_model();
  m.dim_kernel = 2;
  EXPECT_THROW(m.validate(), ModelError);
}
