#include "mkv/model.hpp"

#include <algorithm>
#include <sstream>

namespace mkv {

void McKeanModel::validate() const {
  auto fail = [this](const std::string& what) {
    throw ModelError("model '" + name + "': " + what);
  };
  if (dim_state == 0 || dim_noise == 0 || dim_kernel == 0) fail("dimensions must be positive");
  if (!drift_base) fail("drift_base is required");
  if (drift_kernel) {
    if (drift_kernel->state_dim() != dim_state) fail("drift kernel state dimension != d");
    if (drift_kernel->value_dim() != dim_kernel) fail("drift kernel value dimension != r");
  }
  if (!drift_wrapper && dim_kernel != dim_state) fail("identity wrapper requires r == d");
  if (const auto* s = std::get_if<StateOnlyDiffusion>(&diffusion)) {
    if (!s->sigma) fail("state-only diffusion needs sigma");
  } else {
    const auto& k = std::get<InteractingDiffusion>(diffusion).sigma;
    if (!k) fail("interacting diffusion needs a kernel");
    if (k->state_dim() != dim_state) fail("diffusion kernel state dimension != d");
    if (k->value_dim() != dim_state * dim_noise) fail("diffusion kernel value dimension != d*m'");
  }
  if (diffusion_derivative && !(dim_state == 1 && dim_noise == 1 && !diffusion_interacts()))
    fail("diffusion_derivative requires d = m' = 1 and state-only diffusion");
  if (!(growth_exponent >= 0.0)) fail("growth exponent must be >= 0");
  if (!initial) fail("initial law is required");
}

// ---------------------------------------------------------------------------

TruncationSpec TruncationSpec::polynomial(double K, double gamma, double h_scale, double epsilon,
                                          double delta_star) {
  if (!(K > 0.0) || !(gamma >= 0.0) || !(h_scale > 0.0))
    throw ConfigError("truncation: K and h_scale must be positive, gamma >= 0");
  if (!(epsilon > 0.0 && epsilon <= 0.25))
    throw ConfigError("truncation: epsilon must lie in (0, 1/4]");
  if (!(delta_star > 0.0 && delta_star <= 1.0))
    throw ConfigError("truncation: delta_star must lie in (0, 1]");
  const double power = gamma + 1.0;
  TruncationSpec spec;
  spec.phi = [K, power](double u) { return K * std::pow(1.0 + u, power); };
  spec.phi_inverse = [K, power](double v) {
    return std::max(0.0, std::pow(v / K, 1.0 / power) - 1.0);
  };
  spec.h = [h_scale, epsilon](double delta) { return h_scale * std::pow(delta, -0.5 * epsilon); };
  spec.delta_star = delta_star;
  spec.epsilon = epsilon;
  return spec;
}

TruncationSpec TruncationSpec::disabled() {
  TruncationSpec spec;
  spec.phi = [](double u) { return u; };
  spec.phi_inverse = [](double) { return kInfinity; };
  spec.h = [](double delta) { return 1.0 / delta; };
  return spec;
}

std::vector<std::string> TruncationSpec::check_invariants() const {
  std::vector<std::string> issues;
  auto note = [&issues](const std::string& s) { issues.push_back(s); };

  const double phi0 = phi(0.0);
  for (int k = 0; k <= 40; ++k) {
    const double v = phi0 + std::pow(2.0, 0.5 * k) - 1.0;
    if (v < phi0) continue;
    const double back = phi(phi_inverse(v));
    if (std::fabs(back - v) > 1e-10 * std::max(1.0, std::fabs(v))) {
      std::ostringstream os;
      os << "phi(phi^-1(" << v << ")) = " << back;
      note(os.str());
    }
  }
  if (h(delta_star) < phi(1.0)) {
    std::ostringstream os;
    os << "h(delta_star) = " << h(delta_star) << " < phi(1) = " << phi(1.0);
    note(os.str());
  }
  double previous_h = -kInfinity;
  double sup_scaled = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double delta = delta_star * std::pow(2.0, -0.5 * (40 - k));  // ascending
    const double value = h(delta);
    if (k > 0 && !(value < previous_h)) {
      std::ostringstream os;
      os << "h not strictly decreasing at delta = " << delta;
      note(os.str());
    }
    previous_h = value;
    sup_scaled = std::max(sup_scaled, std::pow(delta, 0.25) * value);
  }
  const double coarse = std::pow(delta_star, 0.25) * h(delta_star);
  if (!std::isfinite(sup_scaled) || sup_scaled > 1e6 * std::max(1.0, coarse))
    note("delta^(1/4) h(delta) appears unbounded on the sampled grid");
  return issues;
}

// ---------------------------------------------------------------------------

void truncate_state(std::span<const double> x, double radius, std::span<double> out) {
  const double r = norm2(x);
  if (r <= radius) {
    if (out.data() != x.data()) std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  const double scale = radius / r;
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = scale * x[c];
}

double truncation_radius(const TruncationSpec& spec, double delta) {
  if (!(delta > 0.0 && delta <= spec.delta_star)) {
    std::ostringstream os;
    os << "step size " << delta << " outside (0, " << spec.delta_star << "]";
    throw ConfigError(os.str());
  }
  return std::max(0.0, spec.phi_inverse(spec.h(delta)));
}

double h_default(double delta, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.25)) throw ConfigError("epsilon must lie in (0, 1/4]");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  return std::pow(delta, -0.5 * epsilon);
}

void tamed_drift(std::span<const double> raw, double delta, std::span<double> out) {
  const double factor = 1.0 / (1.0 + delta * norm2(raw));
  for (std::size_t c = 0; c < raw.size(); ++c) out[c] = raw[c] * factor;
}

// ---------------------------------------------------------------------------

namespace {

struct Average {
  std::size_t skip;
  double weight;
};

Average averaging(const EnsembleState& ensemble, std::size_t self_index, bool exclude_self) {
  const std::size_t n = ensemble.size();
  if (n == 0) throw UsageError("ensemble must be nonempty");
  if (exclude_self) {
    if (n < 2) throw UsageError("exclude_self needs at least two particles");
    if (self_index >= n) throw UsageError("self_index out of range");
    return {self_index, 1.0 / static_cast<double>(n - 1)};
  }
  return {kNoIndex, 1.0 / static_cast<double>(n)};
}

void check_point(const McKeanModel& model, std::span<const double> x,
                 const EnsembleState& ensemble) {
  if (x.size() != model.dim_state || ensemble.dim() != model.dim_state)
    throw ModelError("state dimension mismatch for model '" + model.name + "'");
}

}  // namespace

std::vector<double> truncated_drift(const McKeanModel& model, const TruncationSpec& spec,
                                    double delta, std::span<const double> x,
                                    const EnsembleState& ensemble, std::size_t self_index,
                                    bool exclude_self) {
  check_point(model, x, ensemble);
  const Average avg = averaging(ensemble, self_index, exclude_self);
  std::vector<double> xbar(x.size());
  truncate_state(x, truncation_radius(spec, delta), xbar);

  std::vector<double> out(model.dim_state);
  model.drift_base(xbar, out);
  if (model.drift_kernel) {
    std::vector<double> mean(model.dim_kernel);
    model.drift_kernel->sum_rows(xbar, ensemble.positions(), avg.skip, mean);
    for (double& v : mean) v *= avg.weight;
    std::vector<double> wrapped(model.dim_state);
    if (model.drift_wrapper)
      model.drift_wrapper(mean, wrapped);
    else
      wrapped = mean;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += wrapped[c];
  }
  return out;
}

std::vector<double> truncated_diffusion(const McKeanModel& model, const TruncationSpec& spec,
                                        double delta, std::span<const double> x,
                                        const EnsembleState& ensemble, std::size_t self_index,
                                        bool exclude_self) {
  check_point(model, x, ensemble);
  std::vector<double> xbar(x.size());
  truncate_state(x, truncation_radius(spec, delta), xbar);
  std::vector<double> out(model.dim_state * model.dim_noise);
  if (const auto* s = std::get_if<StateOnlyDiffusion>(&model.diffusion)) {
    s->sigma(xbar, out);
    return out;
  }
  const Average avg = averaging(ensemble, self_index, exclude_self);
  std::get<InteractingDiffusion>(model.diffusion).sigma->sum_rows(xbar, ensemble.positions(),
                                                                  avg.skip, out);
  for (double& v : out) v *= avg.weight;
  return out;
}

// ---------------------------------------------------------------------------

bool GrowthAudit::any_violation() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.violated; });
}

GrowthAudit growth_domination_check(const McKeanModel& model, const TruncationSpec& spec,
                                    std::span<const double> sample_radii,
                                    std::span<const EnsembleState> probe_ensembles) {
  const std::size_t d = model.dim_state;
  constexpr int kRadialSamples = 64;
  // Fixed directions: +-e_c plus the normalized diagonals.
  std::vector<std::vector<double>> directions;
  for (std::size_t c = 0; c < d; ++c) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> e(d, 0.0);
      e[c] = sign;
      directions.push_back(std::move(e));
    }
  }
  if (d > 1) {
    for (double sign : {1.0, -1.0})
      directions.emplace_back(d, sign / std::sqrt(static_cast<double>(d)));
  }

  GrowthAudit audit;
  std::vector<double> x(d), f(d), mean(model.dim_kernel), wrapped(d),
      sigma(d * model.dim_noise);
  for (double u : sample_radii) {
    GrowthAuditRow row;
    row.radius = u;
    row.phi = spec.phi(u);
    for (const auto& dir : directions) {
      for (int s = 0; s <= kRadialSamples; ++s) {
        const double r = u * s / kRadialSamples;
        for (std::size_t c = 0; c < d; ++c) x[c] = r * dir[c];
        model.drift_base(x, f);
        const double base = norm2(f);
        auto evaluate_with = [&](const EnsembleState* probe) {
          double interaction = 0.0;
          if (model.drift_kernel && probe) {
            model.drift_kernel->sum_rows(x, probe->positions(), kNoIndex, mean);
            for (double& v : mean) v /= static_cast<double>(probe->size());
            if (model.drift_wrapper)
              model.drift_wrapper(mean, wrapped);
            else
              wrapped = mean;
            interaction = norm2(wrapped);
          }
          row.max_drift = std::max(row.max_drift, base + interaction);
          if (const auto* so = std::get_if<StateOnlyDiffusion>(&model.diffusion)) {
            so->sigma(x, sigma);
            row.max_diffusion = std::max(row.max_diffusion, norm2(sigma));
          } else if (probe) {
            std::get<InteractingDiffusion>(model.diffusion)
                .sigma->sum_rows(x, probe->positions(), kNoIndex, sigma);
            for (double& v : sigma) v /= static_cast<double>(probe->size());
            row.max_diffusion = std::max(row.max_diffusion, norm2(sigma));
          }
        };
        if (probe_ensembles.empty()) {
          evaluate_with(nullptr);
        } else {
          for (const auto& probe : probe_ensembles) evaluate_with(&probe);
        }
      }
    }
    row.violated = row.max_drift > row.phi || row.max_diffusion > row.phi;
    audit.rows.push_back(row);
  }
  return audit;
}

}  // namespace mkv
