#include "mkv/registry.hpp"

#include <algorithm>

#include "mkv/randomness.hpp"

namespace mkv {

namespace {

StateFn logistic_drift(double l1, double l2) {
  return [l1, l2](std::span<const double> x, std::span<double> out) {
    out[0] = l1 * x[0] * (l2 - std::fabs(x[0]));
  };
}

// l3 |x|^(3/2), written as |x| sqrt|x| to stay exact at 0 and cheap.
StateFn power_diffusion(double l3) {
  return [l3](std::span<const double> x, std::span<double> out) {
    const double a = std::fabs(x[0]);
    out[0] = l3 * a * std::sqrt(a);
  };
}

std::function<double(double)> power_diffusion_derivative(double l3) {
  return [l3](double x) {
    const double s = (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    return 1.5 * l3 * s * std::sqrt(std::fabs(x));
  };
}

InitialLaw constant_initial(double x0) {
  return [x0](RandomStream&, std::span<double> out) { std::fill(out.begin(), out.end(), x0); };
}

McKeanModel base_example(std::string name, const ExampleParameters& p) {
  McKeanModel m;
  m.name = std::move(name);
  m.dim_state = m.dim_noise = m.dim_kernel = 1;
  m.drift_base = logistic_drift(p.lambda1, p.lambda2);
  m.drift_kernel = std::make_shared<DifferenceKernel>(1);
  m.growth_exponent = 1.0;
  m.initial = constant_initial(p.x0);
  return m;
}

}  // namespace

McKeanModel make_model(std::string_view name, const ExampleParameters& p) {
  if (name == "linear-diffusion-interaction") {
    auto m = base_example(std::string(name), p);
    const double l3 = p.lambda3;
    StateFn offset = [l3](std::span<const double> x, std::span<double> out) {
      const double a = std::fabs(x[0]);
      out[0] = l3 * a * std::sqrt(a);
    };
    m.diffusion = InteractingDiffusion{std::make_shared<DifferenceKernel>(1, 1.0, offset)};
    m.validate();
    return m;
  }
  if (name == "linear-drift-only") {
    auto m = base_example(std::string(name), p);
    m.diffusion = StateOnlyDiffusion{power_diffusion(p.lambda3)};
    m.diffusion_derivative = power_diffusion_derivative(p.lambda3);
    m.validate();
    return m;
  }
  if (name == "nonlinear-sin") {
    auto m = base_example(std::string(name), p);
    m.drift_wrapper = [](std::span<const double> v, std::span<double> out) {
      out[0] = std::sin(v[0]);
    };
    m.diffusion = StateOnlyDiffusion{power_diffusion(p.lambda3)};
    m.diffusion_derivative = power_diffusion_derivative(p.lambda3);
    m.validate();
    return m;
  }
  if (name == "zero") {
    McKeanModel m;
    m.name = "zero";
    m.drift_base = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    m.drift_kernel = std::make_shared<ConstantKernel>(1, std::vector<double>{0.0});
    m.diffusion = StateOnlyDiffusion{
        [](std::span<const double>, std::span<double> out) { out[0] = 0.0; }};
    m.diffusion_derivative = [](double) { return 0.0; };
    m.growth_exponent = 0.0;
    m.initial = constant_initial(p.x0);
    m.validate();
    return m;
  }
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::vector<std::string> registered_models() {
  return {"linear-diffusion-interaction", "linear-drift-only", "nonlinear-sin", "zero"};
}

double default_phi_constant(const ExampleParameters& p) {
  return 4.0 * std::max(p.lambda1 * (p.lambda2 + 1.0), p.lambda3);
}

TruncationSpec default_truncation(const ExampleParameters& params, double h_scale,
                                  double epsilon, double K) {
  const double constant = K > 0.0 ? K : default_phi_constant(params);
  return TruncationSpec::polynomial(constant, 1.0, h_scale, epsilon, 1.0);
}

}  // namespace mkv
