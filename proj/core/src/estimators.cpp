#include "tamsm/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "tamsm/error.hpp"
#include "tamsm/parallel.hpp"
#include "tamsm/random.hpp"
#include "tamsm/text_io.hpp"

namespace tamsm {

double SurvivalCurve::at(double t) const {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return 1.0;
  return estimate[static_cast<std::size_t>(it - grid.begin()) - 1];
}

SurvivalCurve SurvivalCurve::on_grid(std::span<const double> query) const {
  SurvivalCurve out;
  out.scenario = scenario;
  out.grid.assign(query.begin(), query.end());
  for (double t : query) {
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    if (it == grid.begin()) {
      out.estimate.push_back(1.0);
      if (has_band()) {
        out.lower.push_back(1.0);
        out.upper.push_back(1.0);
      }
      continue;
    }
    auto k = static_cast<std::size_t>(it - grid.begin()) - 1;
    out.estimate.push_back(estimate[k]);
    if (has_band()) {
      out.lower.push_back(lower[k]);
      out.upper.push_back(upper[k]);
    }
  }
  return out;
}

CumulativeHazard weighted_nelson_aalen(const Cohort& cohort,
                                       std::span<const LikelihoodRatioPath> weights) {
  if (weights.size() != cohort.size())
    throw ModelError("weighted_nelson_aalen: one weight path per subject required");
  const PooledTimes pooled = pooled_event_times(cohort, EventType::outcome);
  const std::size_t J = pooled.size();
  std::vector<double> numerator(J, 0.0), denominator(J, 0.0);

  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const SubjectPath& s = cohort[i];
    const StepFunction& r = weights[i].path;
    const auto r_times = r.times();
    const auto r_values = r.values();
    const double exit = s.exit_time();
    std::size_t c = 0;  // r_times[c-1] < t <= r_times[c]
    double left = r.initial();
    for (std::size_t j = 0; j < J && pooled.times[j] <= exit; ++j) {
      const double t = pooled.times[j];
      while (c < r_times.size() && r_times[c] < t) left = r_values[c++];
      denominator[j] += left;
      if (s.had_outcome() && exit == t) numerator[j] += left;
    }
  }

  CumulativeHazard out;
  out.times = pooled.times;
  out.increments.resize(J);
  out.cumulative.resize(J);
  double h = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (!(denominator[j] > 0.0))
      throw ModelError("empty weighted risk set at time " +
                       io::format_report(pooled.times[j]));
    out.increments[j] = numerator[j] / denominator[j];
    h += out.increments[j];
    out.cumulative[j] = h;
  }
  return out;
}

SurvivalCurve survival_from_cumhaz(const CumulativeHazard& hazard) {
  SurvivalCurve out;
  out.grid.reserve(hazard.size() + 1);
  out.estimate.reserve(hazard.size() + 1);
  out.grid.push_back(0.0);
  out.estimate.push_back(1.0);
  double s = 1.0;
  for (std::size_t j = 0; j < hazard.size(); ++j) {
    const double d = hazard.increments[j];
    if (d > 1.0)
      throw ModelError("cumulative hazard increment above 1 at time " +
                       io::format_report(hazard.times[j]));
    s *= 1.0 - d;
    out.grid.push_back(hazard.times[j]);
    out.estimate.push_back(s);
  }
  return out;
}

PipelineResult run_pipeline(const Cohort& cohort, const DesignSpec& design,
                            const AccelerationSpec& accel,
                            const EstimateOptions& options) {
  const BoundDesign bound(design, cohort.schema());
  const Acceleration acceleration(accel, cohort.schema());

  PipelineResult out;
  out.coefficients = fit_aalen(cohort, bound);
  out.weights.resize(cohort.size());
  std::vector<std::size_t> negatives(cohort.size(), 0);
  parallel_for(cohort.size(), options.threads, [&](std::size_t i) {
    const auto intensity = predict_cum_intensity(out.coefficients, cohort[i], bound);
    negatives[i] = intensity.negative_increments;
    out.weights[i] = likelihood_ratio_path(cohort[i], intensity.path, acceleration,
                                           options.weight_floor);
  });
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out.negative_increments += negatives[i];
    out.floor_hits += out.weights[i].floor_hits;
  }
  out.hazard = weighted_nelson_aalen(cohort, out.weights);
  out.curve = survival_from_cumhaz(out.hazard);
  out.curve.scenario = accel.label();
  return out;
}

namespace {

void check_grid(const Cohort& cohort, std::span<const double> grid) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] < 0.0 || grid[k] > cohort.horizon())
      throw ModelError("grid time " + io::format_report(grid[k]) +
                       " outside [0, horizon]");
    if (k > 0 && !(grid[k] > grid[k - 1]))
      throw ModelError("grid must be strictly increasing");
  }
}

}  // namespace

SurvivalCurve estimate_survival(const Cohort& cohort, const DesignSpec& design,
                                const AccelerationSpec& accel,
                                std::span<const double> grid,
                                const EstimateOptions& options) {
  check_grid(cohort, grid);
  return run_pipeline(cohort, design, accel, options).curve.on_grid(grid);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ModelError("quantile of empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BootstrapResult bootstrap_ci(const Cohort& cohort, const DesignSpec& design,
                             const AccelerationSpec& accel,
                             std::span<const double> grid,
                             const BootstrapOptions& options) {
  if (options.reps < 2) throw ModelError("bootstrap needs at least 2 replicates");
  if (!(options.level > 0.0 && options.level < 1.0))
    throw ModelError("confidence level must lie in (0, 1)");
  check_grid(cohort, grid);

  BootstrapResult out;
  out.replicates = options.reps;
  out.curve = estimate_survival(cohort, design, accel, grid,
                                {options.weight_floor, options.threads});

  const std::size_t n = cohort.size();
  const std::size_t G = grid.size();
  std::vector<std::vector<double>> curves(options.reps);
  std::vector<std::uint8_t> failed(options.reps, 0);

  parallel_for(options.reps, options.threads, [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, 0xb0075, r));
    std::vector<SubjectPath> sample;
    sample.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
      sample.push_back(cohort[rng.below(n)].with_id(std::to_string(k)));
    try {
      const Cohort resampled(std::move(sample), cohort.horizon(), cohort.schema());
      curves[r] = estimate_survival(resampled, design, accel, grid,
                                    {options.weight_floor, 1})
                      .estimate;
    } catch (const Error&) {
      failed[r] = 1;
    }
  });

  for (auto f : failed) out.dropped += f;
  if (out.dropped * 10 > options.reps)
    throw ModelError("bootstrap: " + std::to_string(out.dropped) + " of " +
                     std::to_string(options.reps) + " replicates failed");

  const double alpha = (1.0 - options.level) / 2.0;
  out.curve.lower.resize(G);
  out.curve.upper.resize(G);
  std::vector<double> column;
  column.reserve(options.reps);
  for (std::size_t g = 0; g < G; ++g) {
    column.clear();
    for (std::size_t r = 0; r < options.reps; ++r)
      if (!failed[r]) column.push_back(curves[r][g]);
    std::sort(column.begin(), column.end());
    const double est = out.curve.estimate[g];
    out.curve.lower[g] = std::min(quantile_sorted(column, alpha), est);
    out.curve.upper[g] = std::max(quantile_sorted(column, 1.0 - alpha), est);
  }
  return out;
}

}  // namespace tamsm
