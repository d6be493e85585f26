#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>

#include "mkv/common.hpp"
#include "mkv/kernels.hpp"

namespace mkv {

class RandomStream;

/// Diffusion depends on the particle's own state only: b(x, mu) = sigma(x).
struct StateOnlyDiffusion {
  StateFn sigma;  ///< R^d -> R^{d x m'}, row-major
};

/// Diffusion is an interaction average: b(x, mu) = int sigma(x, y) mu(dy).
struct InteractingDiffusion {
  std::shared_ptr<const PairKernel> sigma;  ///< value_dim = d * m'
};

using DiffusionMode = std::variant<StateOnlyDiffusion, InteractingDiffusion>;

/// Draws one initial position; the stream is keyed per (path, particle).
using InitialLaw = std::function<void(RandomStream&, std::span<double>)>;

/**
 * @brief Coefficients of a McKean-Vlasov SDE
 *
 *   dX = [f(X) + A(int k(X, y) mu(dy))] dt + b(X, mu) dW
 *
 * A missing drift kernel means no interaction in the drift; a missing
 * wrapper means A is the identity (then r must equal d).
 */
struct McKeanModel {
  std::string name;
  std::size_t dim_state = 1;
  std::size_t dim_noise = 1;
  std::size_t dim_kernel = 1;

  StateFn drift_base;
  std::shared_ptr<const PairKernel> drift_kernel;
  StateFn drift_wrapper;
  DiffusionMode diffusion;
  /// sigma'(x) for scalar state-only diffusion; enables Milstein.
  std::function<double(double)> diffusion_derivative;
  double growth_exponent = 1.0;
  InitialLaw initial;

  /// Throws ModelError when declared dimensions and fields disagree.
  void validate() const;

  bool diffusion_interacts() const {
    return std::holds_alternative<InteractingDiffusion>(diffusion);
  }
  bool supports_milstein() const {
    return dim_state == 1 && dim_noise == 1 && !diffusion_interacts() &&
           static_cast<bool>(diffusion_derivative);
  }
};

/**
 * @brief Truncation machinery: the pair (phi, phi^-1), the growth function h
 * and the largest admissible step delta_star.
 *
 * The truncation radius for step size delta is phi^-1(h(delta)), clamped at 0.
 */
struct TruncationSpec {
  std::function<double(double)> phi;
  std::function<double(double)> phi_inverse;
  std::function<double(double)> h;
  double delta_star = 1.0;
  double epsilon = 0.25;

  /// phi(u) = K (1 + u)^(gamma+1), h(delta) = h_scale * delta^(-epsilon/2).
  static TruncationSpec polynomial(double K, double gamma, double h_scale, double epsilon,
                                   double delta_star = 1.0);

  /// Radius +inf for every delta: the scheme reduces to plain Euler-Maruyama.
  static TruncationSpec disabled();

  /**
   * Sampled audit of the structural requirements: phi(phi^-1(v)) = v,
   * h(delta_star) >= phi(1), h strictly decreasing, delta^(1/4) h(delta) bounded.
   * Returns one message per violation; empty means all checks passed.
   */
  std::vector<std::string> check_invariants() const;
};

/// x if |x| <= radius, else radius * x / |x|. Writes into `out` (may alias x).
void truncate_state(std::span<const double> x, double radius, std::span<double> out);

/// phi^-1(h(delta)), clamped to 0; ConfigError if delta is outside (0, delta_star].
double truncation_radius(const TruncationSpec& spec, double delta);

/// delta^(-epsilon/2); ConfigError unless 0 < delta <= 1 and 0 < epsilon <= 1/4.
double h_default(double delta, double epsilon);

/// v / (1 + delta |v|)
void tamed_drift(std::span<const double> raw, double delta, std::span<double> out);

/**
 * a^Delta(x, mu): the drift with the state argument projected onto the
 * truncation ball. The ensemble enters untruncated. With exclude_self the
 * average runs over j != self_index with weight 1/(N-1), otherwise over all
 * particles with weight 1/N.
 */
std::vector<double> truncated_drift(const McKeanModel& model, const TruncationSpec& spec,
                                    double delta, std::span<const double> x,
                                    const EnsembleState& ensemble, std::size_t self_index,
                                    bool exclude_self);

/// b^Delta(x, mu), returned row-major d x m'.
std::vector<double> truncated_diffusion(const McKeanModel& model, const TruncationSpec& spec,
                                        double delta, std::span<const double> x,
                                        const EnsembleState& ensemble, std::size_t self_index,
                                        bool exclude_self);

struct GrowthAuditRow {
  double radius = 0.0;
  double phi = 0.0;
  double max_drift = 0.0;      ///< max |f(x)| + |A(mean k(x, .))|
  double max_diffusion = 0.0;  ///< max ||b(x, .)||_F
  bool violated = false;
};

struct GrowthAudit {
  std::vector<GrowthAuditRow> rows;
  bool any_violation() const;
};

/**
 * Sampled check of sup_{|x| <= u} (|a| v ||b||) <= phi(u). Interaction terms
 * are evaluated against each probe ensemble. Violations are reported, not thrown.
 */
GrowthAudit growth_domination_check(const McKeanModel& model, const TruncationSpec& spec,
                                    std::span<const double> sample_radii,
                                    std::span<const EnsembleState> probe_ensembles);

}  // namespace mkv
