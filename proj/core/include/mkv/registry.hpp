#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mkv/model.hpp"

namespace mkv {

/// Parameters shared by the built-in one-dimensional examples.
struct ExampleParameters {
  double lambda1 = 2.5;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double x0 = 1.0;
};

/**
 * Built-in models:
 *   linear-diffusion-interaction  f = l1 x (l2 - |x|), k = x - y, b = l3 |x|^1.5 + mean(x - y)
 *   linear-drift-only             same drift, b = l3 |x|^1.5
 *   nonlinear-sin                 f + sin(mean(x - y)), b = l3 |x|^1.5
 *   zero                          f = k = sigma = 0
 * All start from X_0 = x0 for every particle.
 */
McKeanModel make_model(std::string_view name, const ExampleParameters& params = {});

std::vector<std::string> registered_models();

/// K = 4 max(l1 (l2 + 1), l3), the constant in phi(u) = K (1 + u)^2.
double default_phi_constant(const ExampleParameters& params);

inline constexpr double kDefaultHScale = 5120.0;
inline constexpr double kDefaultEpsilon = 0.25;

/// phi(u) = K (1+u)^2 with K from default_phi_constant, h = h_scale delta^(-eps/2), delta* = 1.
TruncationSpec default_truncation(const ExampleParameters& params,
                                  double h_scale = kDefaultHScale,
                                  double epsilon = kDefaultEpsilon, double K = 0.0);

}  // namespace mkv
