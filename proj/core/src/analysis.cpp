#include "mkv/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include "mkv/parallel.hpp"

namespace mkv {

void ConvergenceReport::finalize() {
  std::sort(rows.begin(), rows.end(),
            [](const ConvergenceRow& a, const ConvergenceRow& b) { return a.delta < b.delta; });
  slope.reset();
  intercept.reset();
  std::vector<std::pair<double, double>> points;
  for (const auto& r : rows) points.emplace_back(r.delta, r.rms_error);
  std::size_t positive = 0;
  for (const auto& p : points) positive += (p.second > 0.0) ? 1 : 0;
  if (positive < 2) {
    warnings.push_back(rows.size() < 2 ? "slope undefined: fewer than two step sizes"
                                        : "slope undefined: fewer than two positive errors");
    return;
  }
  const auto fit = slope_fit(points);
  slope = fit.slope;
  intercept = fit.intercept;
  warnings.insert(warnings.end(), fit.warnings.begin(), fit.warnings.end());
}

double squared_difference(const EnsembleState& a, const EnsembleState& b) {
  if (a.size() != b.size() || a.dim() != b.dim())
    throw UsageError("ensembles must share N and d");
  const auto x = a.positions();
  const auto y = b.positions();
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s;
}

double strong_error(std::span<const EnsembleState> reference, std::span<const EnsembleState> test,
                    std::size_t* diverged) {
  if (reference.empty() || reference.size() != test.size())
    throw UsageError("strong_error needs M >= 1 paired ensembles");
  double total = 0.0;
  std::size_t count = 0, skipped = 0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    if (!reference[k].all_finite() || !test[k].all_finite()) {
      ++skipped;
      continue;
    }
    total += squared_difference(reference[k], test[k]);
    count += reference[k].size();
  }
  if (diverged) *diverged = skipped;
  if (count == 0) throw UsageError("strong_error: every path diverged");
  return std::sqrt(total / static_cast<double>(count));
}

double moment_estimate(std::span<const EnsembleState> ensembles, double q) {
  if (!(q >= 1.0)) throw UsageError("moment order must be >= 1");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& e : ensembles) {
    if (!e.all_finite()) continue;
    for (std::size_t i = 0; i < e.size(); ++i) total += std::pow(norm2(e[i]), q);
    count += e.size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double wasserstein_p_1d(std::span<const double> a, std::span<const double> b, double p) {
  if (a.size() != b.size() || a.empty()) throw UsageError("samples must have equal nonzero size");
  if (!(p >= 1.0)) throw UsageError("p must be >= 1");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += std::pow(std::fabs(x[k] - y[k]), p);
  return std::pow(s / static_cast<double>(x.size()), 1.0 / p);
}

SlopeFit slope_fit(std::span<const std::pair<double, double>> rows) {
  SlopeFit fit;
  std::vector<double> lx, ly;
  for (const auto& [delta, error] : rows) {
    if (!(error > 0.0) || !(delta > 0.0)) {
      std::ostringstream os;
      os << "dropped row delta=" << delta << " error=" << error << " from the slope fit";
      fit.warnings.push_back(os.str());
      continue;
    }
    lx.push_back(std::log2(delta));
    ly.push_back(std::log2(error));
  }
  fit.used = lx.size();
  if (fit.used < 2) throw UsageError("slope fit needs at least two rows with positive error");
  const double n = static_cast<double>(fit.used);
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (sxx == 0.0) throw UsageError("slope fit needs at least two distinct step sizes");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

// ---------------------------------------------------------------------------

ChaosReport chaos_trend(const McKeanModel& model, const TruncationSpec& spec,
                        const ChaosSettings& settings) {
  if (model.dim_state != 1) throw UsageError("chaos_trend works on one-dimensional models");
  if (settings.paths == 0) throw UsageError("chaos_trend needs at least one path");
  for (std::size_t k = 1; k < settings.n_values.size(); ++k)
    if (settings.n_values[k] <= settings.n_values[k - 1])
      throw UsageError("N values must be increasing");

  ChaosReport report;
  std::vector<double> previous_distance;
  for (const std::size_t n : settings.n_values) {
    const std::size_t large = 2 * n;
    std::vector<double> distance(settings.paths);
    parallel_for(settings.paths, settings.threads, [&](std::size_t path) {
      std::array<EnsembleState, 2> terminal;
      for (int side = 0; side < 2; ++side) {
        SolverConfig cfg;
        cfg.scheme = settings.scheme;
        cfg.delta = settings.delta;
        cfg.horizon = settings.horizon;
        cfg.n_particles = side == 0 ? n : large;
        const NoiseSpec noise{settings.seed, cfg.n_particles, model.dim_noise, settings.delta,
                              settings.horizon};
        terminal[side] = simulate(cfg, model, spec, noise, path).terminal;
      }
      const auto a = terminal[0].positions();
      const auto b = terminal[1].positions().first(n);
      distance[path] = wasserstein_p_1d(a, b, 2.0);
    });
    double mean = 0.0;
    for (double d : distance) mean += d;
    mean /= static_cast<double>(settings.paths);
    double var = 0.0;
    for (double d : distance) var += (d - mean) * (d - mean);
    const double se = settings.paths > 1
                          ? std::sqrt(var / static_cast<double>(settings.paths - 1) /
                                      static_cast<double>(settings.paths))
                          : 0.0;
    report.rows.push_back(ChaosRow{n, large, mean, se});
  }
  for (std::size_t k = 1; k < report.rows.size(); ++k) {
    const auto& prev = report.rows[k - 1];
    const auto& cur = report.rows[k];
    if (cur.distance <= prev.distance) continue;
    ++report.inversions;
    const double band =
        2.0 * std::sqrt(prev.standard_error * prev.standard_error +
                        cur.standard_error * cur.standard_error);
    if (cur.distance - prev.distance > band) report.trend_ok = false;
  }
  if (report.inversions > 1) report.trend_ok = false;
  return report;
}

// ---------------------------------------------------------------------------

const TimingCell* TimingTable::find(const std::string& label, std::size_t n) const {
  for (const auto& c : cells)
    if (c.label == label && c.n_particles == n) return &c;
  return nullptr;
}

TimingTable timing_benchmark(const McKeanModel& model, const TruncationSpec& spec,
                             std::span<const TimingCase> cases,
                             std::span<const std::size_t> n_values, std::size_t repetitions,
                             std::uint64_t seed) {
  if (repetitions < 3) throw UsageError("timing needs at least three repetitions");
  TimingTable table;
  for (const auto& c : cases) {
    std::optional<double> previous;
    for (const std::size_t n : n_values) {
      SolverConfig cfg = c.config;
      cfg.n_particles = n;
      cfg.validate(model);
      const NoiseSpec noise{seed, n, model.dim_noise, cfg.delta, cfg.horizon};

      SolverConfig warm = cfg;
      warm.horizon = cfg.delta;
      const NoiseSpec warm_noise{seed, n, model.dim_noise, cfg.delta, cfg.delta};
      (void)simulate(warm, model, spec, warm_noise, 0);

      std::vector<double> seconds;
      for (std::size_t r = 0; r < repetitions; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const auto traj = simulate(cfg, model, spec, noise, r);
        const auto stop = std::chrono::steady_clock::now();
        (void)traj;
        seconds.push_back(std::chrono::duration<double>(stop - start).count());
      }
      std::sort(seconds.begin(), seconds.end());
      const std::size_t mid = seconds.size() / 2;
      const double median =
          seconds.size() % 2 ? seconds[mid] : 0.5 * (seconds[mid - 1] + seconds[mid]);
      TimingCell cell{c.label, n, median, std::nullopt};
      if (previous && *previous > 0.0) cell.ratio = median / *previous;
      previous = median;
      table.cells.push_back(cell);
    }
  }
  return table;
}

}  // namespace mkv
