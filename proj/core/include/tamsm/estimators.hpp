#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tamsm/acceleration.hpp"
#include "tamsm/additive_hazard.hpp"
#include "tamsm/cohort.hpp"
#include "tamsm/covariate_expr.hpp"
#include "tamsm/reweighting.hpp"

namespace tamsm {

/// Ĥ^g as a step function on the pooled outcome times.
struct CumulativeHazard {
  std::vector<double> times;
  std::vector<double> increments;
  std::vector<double> cumulative;

  std::size_t size() const noexcept { return times.size(); }
};

/// Survival estimate on a time grid, with optional pointwise bands.
struct SurvivalCurve {
  std::vector<double> grid;
  std::vector<double> estimate;
  /// Empty unless a bootstrap band was computed.
  std::vector<double> lower;
  std::vector<double> upper;
  std::string scenario;

  bool has_band() const noexcept { return !lower.empty(); }
  /// Right-continuous step interpolation; 1 before the first grid point.
  double at(double t) const;
  /// The curve (and band) evaluated at each time of `grid`.
  SurvivalCurve on_grid(std::span<const double> grid) const;
};

/// Weighted Nelson–Aalen estimator. At each pooled outcome time s
///   ΔĤ(s) = Σ_i R_i(s-) ΔN_i(s) / Σ_j R_j(s-) Y_j(s)
/// with tied events summed in the numerator. Throws ModelError on an empty
/// weighted risk set.
CumulativeHazard weighted_nelson_aalen(const Cohort& cohort,
                                       std::span<const LikelihoodRatioPath> weights);

/// Product-limit transform Ŝ(t) = Π_{s<=t} (1 - ΔĤ(s)); grid starts at 0.
/// Throws ModelError if an increment exceeds 1.
SurvivalCurve survival_from_cumhaz(const CumulativeHazard& hazard);

struct EstimateOptions {
  double weight_floor = kDefaultWeightFloor;
  unsigned threads = 0;
};

/// Every intermediate of one run of the estimation pipeline.
struct PipelineResult {
  CumulativeCoefficients coefficients;
  std::vector<LikelihoodRatioPath> weights;
  CumulativeHazard hazard;
  /// Ŝ^g at 0 and every pooled outcome time.
  SurvivalCurve curve;
  std::size_t negative_increments = 0;
  std::size_t floor_hits = 0;
};

/// fit_aalen -> predict_cum_intensity -> likelihood_ratio_path ->
/// weighted_nelson_aalen -> survival_from_cumhaz.
PipelineResult run_pipeline(const Cohort& cohort, const DesignSpec& design,
                            const AccelerationSpec& accel,
                            const EstimateOptions& options = {});

/// Ŝ^g evaluated on `grid` (right-continuous). Grid times must lie in
/// [0, horizon].
SurvivalCurve estimate_survival(const Cohort& cohort, const DesignSpec& design,
                                const AccelerationSpec& accel,
                                std::span<const double> grid,
                                const EstimateOptions& options = {});

struct BootstrapOptions {
  std::size_t reps = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  double weight_floor = kDefaultWeightFloor;
  unsigned threads = 0;
};

struct BootstrapResult {
  SurvivalCurve curve;
  std::size_t replicates = 0;
  /// Replicates whose pipeline failed (e.g. no treatment events).
  std::size_t dropped = 0;
};

/// Point estimate plus a pointwise percentile band from subject-level
/// resampling with replacement. Replicate r uses a seed derived from
/// (seed, r), so results do not depend on the thread count. Throws
/// ModelError when more than 10% of replicates fail.
BootstrapResult bootstrap_ci(const Cohort& cohort, const DesignSpec& design,
                             const AccelerationSpec& accel,
                             std::span<const double> grid,
                             const BootstrapOptions& options);

/// Linear-interpolation quantile of sorted data, 0 <= q <= 1.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace tamsm
