#include "mkv/solver.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace mkv {

std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::TruncatedEM_Full: return "truncated-em";
    case Scheme::TamedEM_Full: return "tamed-em";
    case Scheme::TruncatedMilstein_Full: return "truncated-milstein";
    case Scheme::TruncatedEM_RBM: return "truncated-em-rbm";
    case Scheme::TruncatedMilstein_RBM: return "truncated-milstein-rbm";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::TruncatedEM_Full, Scheme::TamedEM_Full, Scheme::TruncatedMilstein_Full,
                   Scheme::TruncatedEM_RBM, Scheme::TruncatedMilstein_RBM}) {
    if (scheme_name(s) == name) return s;
  }
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

bool is_rbm(Scheme s) {
  return s == Scheme::TruncatedEM_RBM || s == Scheme::TruncatedMilstein_RBM;
}

bool is_milstein(Scheme s) {
  return s == Scheme::TruncatedMilstein_Full || s == Scheme::TruncatedMilstein_RBM;
}

std::size_t nearest_divisor(std::size_t n, double target) {
  if (n < 2) throw ConfigError("need at least two particles to form batches");
  std::size_t best = n;
  double best_gap = kInfinity;
  for (std::size_t d = 2; d <= n; ++d) {
    if (n % d != 0) continue;
    const double gap = std::fabs(static_cast<double>(d) - target);
    if (gap < best_gap) {
      best = d;
      best_gap = gap;
    }
  }
  return best;
}

std::size_t SolverConfig::steps() const {
  return integer_ratio(horizon, delta, "horizon / delta");
}

std::size_t SolverConfig::batch_size() const {
  if (!is_rbm(scheme)) return n_particles;
  if (const auto* fixed = std::get_if<FixedBatch>(&batch_rule)) return fixed->size;
  const double beta = std::get<PowerLawBatch>(batch_rule).beta;
  const double target = std::min(std::pow(delta, -beta), static_cast<double>(n_particles));
  return nearest_divisor(n_particles, target);
}

void SolverConfig::validate(const McKeanModel& model) const {
  if (!(delta > 0.0)) throw ConfigError("step size must be positive");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (n_particles == 0) throw ConfigError("need at least one particle");
  if (exclude_self && n_particles < 2)
    throw ConfigError("the 1/(N-1) convention needs N >= 2");
  (void)steps();
  if (is_rbm(scheme)) {
    if (const auto* pl = std::get_if<PowerLawBatch>(&batch_rule)) {
      if (!(pl->beta > 0.0 && pl->beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
    }
    check_batch_shape(n_particles, batch_size());
  }
  if (is_milstein(scheme) && !model.supports_milstein())
    throw ConfigError("Milstein needs d = m' = 1, state-only diffusion and sigma'");
}

// ---------------------------------------------------------------------------

Stepper::Stepper(const McKeanModel& model, const TruncationSpec& truncation, Scheme scheme,
                 double delta, bool exclude_self, Summation summation)
    : model_(model), scheme_(scheme), delta_(delta), exclude_self_(exclude_self) {
  if (is_milstein(scheme) && !model.supports_milstein())
    throw ConfigError("Milstein needs d = m' = 1, state-only diffusion and sigma'");
  radius_ = (scheme == Scheme::TamedEM_Full) ? kInfinity : truncation_radius(truncation, delta);

  if (summation == Summation::Auto)
    drift_separable_ = dynamic_cast<const SeparableKernel*>(model.drift_kernel.get());
  if (const auto* s = std::get_if<StateOnlyDiffusion>(&model.diffusion)) {
    state_diffusion_ = s;
  } else {
    diffusion_kernel_ = std::get<InteractingDiffusion>(model.diffusion).sigma.get();
    if (summation == Summation::Auto)
      diffusion_separable_ = dynamic_cast<const SeparableKernel*>(diffusion_kernel_);
  }
  const std::size_t d = model.dim_state;
  xbar_.resize(d);
  drift_.resize(d);
  mean_.resize(model.dim_kernel);
  wrapped_.resize(d);
  sigma_.resize(d * model.dim_noise);
  std::size_t features = 0;
  if (drift_separable_) {
    drift_totals_.resize(drift_separable_->feature_dim());
    features = std::max(features, drift_separable_->feature_dim());
  }
  if (diffusion_separable_) {
    diffusion_totals_.resize(diffusion_separable_->feature_dim());
    features = std::max(features, diffusion_separable_->feature_dim());
  }
  feature_.resize(features);
}

void Stepper::totals_for(std::span<const double> rows) {
  if (drift_separable_) drift_separable_->feature_totals(rows, drift_totals_);
  if (diffusion_separable_) diffusion_separable_->feature_totals(rows, diffusion_totals_);
}

void Stepper::update_particle(std::span<const double> x, const Scope& scope,
                              std::span<const double> dW, std::span<double> out) {
  const std::size_t d = model_.dim_state;
  const std::size_t m = model_.dim_noise;
  const std::size_t n_rows = scope.rows.size() / d;
  const std::size_t count = (scope.self < n_rows) ? n_rows - 1 : n_rows;

  truncate_state(x, radius_, xbar_);

  auto interaction_sum = [&](const PairKernel& kernel, const SeparableKernel* separable,
                             std::span<const double> totals, std::span<double> result) {
    if (separable && !totals.empty()) {
      std::span<const double> self_feature;
      if (scope.self < n_rows) {
        const auto f = std::span<double>(feature_).first(separable->feature_dim());
        separable->feature(scope.rows.subspan(scope.self * d, d), f);
        self_feature = f;
      }
      separable->sum_from_totals(xbar_, count, totals, self_feature, result);
    } else {
      kernel.sum_rows(xbar_, scope.rows, scope.self, result);
    }
    for (double& v : result) v *= scope.weight;
  };

  model_.drift_base(xbar_, drift_);
  if (model_.drift_kernel) {
    interaction_sum(*model_.drift_kernel, drift_separable_, scope.drift_totals, mean_);
    if (model_.drift_wrapper) {
      model_.drift_wrapper(mean_, wrapped_);
      for (std::size_t c = 0; c < d; ++c) drift_[c] += wrapped_[c];
    } else {
      for (std::size_t c = 0; c < d; ++c) drift_[c] += mean_[c];
    }
  }
  if (scheme_ == Scheme::TamedEM_Full) tamed_drift(drift_, delta_, drift_);

  if (state_diffusion_)
    state_diffusion_->sigma(xbar_, sigma_);
  else
    interaction_sum(*diffusion_kernel_, diffusion_separable_, scope.diffusion_totals, sigma_);

  for (std::size_t c = 0; c < d; ++c) {
    double noise_term = 0.0;
    for (std::size_t k = 0; k < m; ++k) noise_term += sigma_[c * m + k] * dW[k];
    out[c] = x[c] + drift_[c] * delta_ + noise_term;
  }
  if (is_milstein(scheme_)) {
    const double s = sigma_[0];
    const double ds = model_.diffusion_derivative(xbar_[0]);
    out[0] += 0.5 * s * ds * (dW[0] * dW[0] - delta_);
  }
}

void Stepper::advance(const EnsembleState& in, std::span<const double> noise,
                      const BatchPartition* partition, EnsembleState& out) {
  const std::size_t n = in.size();
  const std::size_t d = model_.dim_state;
  const std::size_t m = model_.dim_noise;
  if (in.dim() != d) throw ModelError("ensemble dimension does not match the model");
  if (noise.size() != n * m) throw UsageError("noise must hold N x m' increments");
  if (out.size() != n || out.dim() != d) out = EnsembleState(n, d);
  out.time_index = in.time_index + 1;

  if (!is_rbm(scheme_)) {
    const bool exclude = exclude_self_;
    if (exclude && n < 2) throw UsageError("the 1/(N-1) convention needs N >= 2");
    Scope scope{in.positions(), kNoIndex, 1.0 / static_cast<double>(exclude ? n - 1 : n),
                {}, {}};
    if (drift_separable_ || diffusion_separable_) {
      totals_for(in.positions());
      scope.drift_totals = drift_totals_;
      scope.diffusion_totals = diffusion_totals_;
    }
    for (std::size_t i = 0; i < n; ++i) {
      scope.self = exclude ? i : kNoIndex;
      update_particle(in[i], scope, noise.subspan(i * m, m), out[i]);
    }
    return;
  }

  if (!partition) throw UsageError("random batch schemes need a partition");
  if (partition->n_particles() != n) throw UsageError("partition size does not match the ensemble");
  const std::size_t p = partition->batch_size();
  gathered_.resize(p * d);
  for (std::size_t b = 0; b < partition->n_batches(); ++b) {
    const auto members = partition->batch(b);
    for (std::size_t s = 0; s < p; ++s) {
      const auto x = in[members[s]];
      std::copy(x.begin(), x.end(), gathered_.begin() + static_cast<std::ptrdiff_t>(s * d));
    }
    Scope scope{gathered_, kNoIndex, 1.0 / static_cast<double>(p - 1), {}, {}};
    if (drift_separable_ || diffusion_separable_) {
      totals_for(gathered_);
      scope.drift_totals = drift_totals_;
      scope.diffusion_totals = diffusion_totals_;
    }
    for (std::size_t s = 0; s < p; ++s) {
      const std::size_t i = members[s];
      scope.self = s;
      update_particle(in[i], scope, noise.subspan(i * m, m), out[i]);
    }
  }
}

// ---------------------------------------------------------------------------

EnsembleState step_full_em(const EnsembleState& state, const McKeanModel& model,
                           const TruncationSpec& spec, double delta,
                           std::span<const double> noise, bool exclude_self,
                           Summation summation) {
  Stepper stepper(model, spec, Scheme::TruncatedEM_Full, delta, exclude_self, summation);
  EnsembleState out;
  stepper.advance(state, noise, nullptr, out);
  return out;
}

EnsembleState step_rbm_em(const EnsembleState& state, const McKeanModel& model,
                          const TruncationSpec& spec, double delta, std::span<const double> noise,
                          const BatchPartition& partition, Summation summation) {
  Stepper stepper(model, spec, Scheme::TruncatedEM_RBM, delta, true, summation);
  EnsembleState out;
  stepper.advance(state, noise, &partition, out);
  return out;
}

EnsembleState step_milstein(const EnsembleState& state, const McKeanModel& model,
                            const TruncationSpec& spec, double delta,
                            std::span<const double> noise, bool exclude_self) {
  Stepper stepper(model, spec, Scheme::TruncatedMilstein_Full, delta, exclude_self);
  EnsembleState out;
  stepper.advance(state, noise, nullptr, out);
  return out;
}

EnsembleState step_tamed_em(const EnsembleState& state, const McKeanModel& model, double delta,
                            std::span<const double> noise, bool exclude_self) {
  Stepper stepper(model, TruncationSpec::disabled(), Scheme::TamedEM_Full, delta, exclude_self);
  EnsembleState out;
  stepper.advance(state, noise, nullptr, out);
  return out;
}

EnsembleState initial_ensemble(const McKeanModel& model, const NoiseSpec& noise,
                               std::uint64_t path_id) {
  EnsembleState state(noise.n_particles, model.dim_state);
  auto stream = rng_stream(noise, StreamPurpose::initial, path_id, 0);
  for (std::size_t i = 0; i < state.size(); ++i) model.initial(stream, state[i]);
  return state;
}

// ---------------------------------------------------------------------------

namespace {

struct MemberRun {
  const CoupledMember* spec;
  std::size_t ratio;
  std::size_t steps;
  std::size_t batch;
  Stepper stepper;
  EnsembleState state, next;
  Trajectory result;
  std::size_t step = 0;
};

}  // namespace

std::vector<Trajectory> run_coupled(std::span<const CoupledMember> members,
                                    const McKeanModel& model, const NoiseSpec& noise,
                                    std::uint64_t path_id) {
  if (members.empty()) throw UsageError("run_coupled needs at least one member");
  noise.validate();
  if (noise.dim_noise != model.dim_noise)
    throw ConfigError("noise dimension does not match the model");
  const std::size_t n = noise.n_particles;
  const std::size_t m = noise.dim_noise;
  const std::size_t fine_steps = noise.fine_steps();

  const EnsembleState initial = initial_ensemble(model, noise, path_id);
  std::vector<MemberRun> runs;
  runs.reserve(members.size());
  for (const auto& member : members) {
    const auto& cfg = member.config;
    cfg.validate(model);
    if (cfg.n_particles != n) throw ConfigError("coupled members must share N");
    if (std::fabs(cfg.horizon - noise.horizon) > 1e-12 * noise.horizon)
      throw ConfigError("coupled members must share the horizon");
    const std::size_t ratio = noise.ratio(cfg.delta);
    runs.push_back(MemberRun{&member, ratio, cfg.steps(), cfg.batch_size(),
                             Stepper(model, member.truncation, cfg.scheme, cfg.delta,
                                     cfg.exclude_self, cfg.summation),
                             initial, EnsembleState(n, model.dim_state), Trajectory{}});
    runs.back().result.batch_size = runs.back().batch;
  }

  // Members with the same coarsening ratio share one running increment sum.
  std::map<std::size_t, std::vector<double>> sums;
  for (const auto& r : runs) sums.emplace(r.ratio, std::vector<double>(n * m, 0.0));

  std::vector<double> chunk(n * 4 * m);
  const std::size_t chunks = (fine_steps + 3) / 4;
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < n; ++i)
      brownian_chunk(noise, path_id, i, c, std::span<double>(chunk).subspan(i * 4 * m, 4 * m));

    for (std::size_t local = 0; local < 4; ++local) {
      const std::size_t s = 4 * c + local;
      if (s >= fine_steps) break;
      for (auto& [ratio, sum] : sums) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t k = 0; k < m; ++k) sum[i * m + k] += chunk[i * 4 * m + local * m + k];
      }
      for (auto& run : runs) {
        if ((s + 1) % run.ratio != 0) continue;
        if (!run.result.diverged) {
          const auto& cfg = run.spec->config;
          std::optional<BatchPartition> partition;
          if (is_rbm(cfg.scheme)) {
            auto stream = rng_stream(noise, StreamPurpose::partition, path_id, run.step);
            partition.emplace(sample_partition(n, run.batch, stream));
          }
          run.stepper.advance(run.state, sums.at(run.ratio),
                              partition ? &*partition : nullptr, run.next);
          std::swap(run.state, run.next);
          if (!run.state.all_finite()) {
            run.result.diverged = true;
            run.result.diverged_step = static_cast<std::int64_t>(run.step);
          }
          ++run.step;
          const std::size_t stride = cfg.checkpoint_stride;
          if (stride && run.step % stride == 0) run.result.checkpoints.push_back(run.state);
        }
      }
      for (auto& [ratio, sum] : sums) {
        if ((s + 1) % ratio == 0) std::fill(sum.begin(), sum.end(), 0.0);
      }
    }
  }

  std::vector<Trajectory> out;
  out.reserve(runs.size());
  for (auto& run : runs) {
    run.result.terminal = std::move(run.state);
    out.push_back(std::move(run.result));
  }
  return out;
}

Trajectory simulate(const SolverConfig& config, const McKeanModel& model,
                    const TruncationSpec& spec, const NoiseSpec& noise, std::uint64_t path_id) {
  const CoupledMember member{config, spec};
  return std::move(run_coupled(std::span(&member, 1), model, noise, path_id).front());
}

CoupledPair simulate_coupled(const SolverConfig& reference, const SolverConfig& test,
                             const McKeanModel& model, const TruncationSpec& spec,
                             const NoiseSpec& noise, std::uint64_t path_id) {
  if (reference.n_particles != test.n_particles) throw ConfigError("configs must share N");
  if (std::fabs(reference.horizon - test.horizon) > 1e-12 * reference.horizon)
    throw ConfigError("configs must share the horizon");
  const CoupledMember members[] = {{reference, spec}, {test, spec}};
  auto runs = run_coupled(members, model, noise, path_id);
  return {std::move(runs[0]), std::move(runs[1])};
}

}  // namespace mkv
