#pragma once

#include <cstddef>
#include <span>

#include "tamsm/acceleration.hpp"
#include "tamsm/cohort.hpp"
#include "tamsm/step_function.hpp"

namespace tamsm {

inline constexpr double kDefaultWeightFloor = 1e-6;

/// Estimated likelihood ratio R̂_i, starting at 1.
struct LikelihoodRatioPath {
  StepFunction path{1.0};
  /// Steps at which the value fell below the floor and was raised to it.
  std::size_t floor_hits = 0;
};

/// Pathwise product solution of R(t) = 1 + ∫ R(s-) (g(s) - 1) dM̂(s).
///
/// At every change point t_k of `cum_intensity` (the subject's at-risk pooled
/// treatment times):
///   R(t_k) = R(t_k-) * (1 + (g(t_k) - 1) * (ΔN(t_k) - ΔΛ̂(t_k)))
/// with g read from the left-limit covariate state. Values below `floor` are
/// raised to `floor`. g ≡ 1 leaves R identically 1.
LikelihoodRatioPath likelihood_ratio_path(const SubjectPath& subject,
                                          const StepFunction& cum_intensity,
                                          const Acceleration& accel,
                                          double floor = kDefaultWeightFloor);

struct WeightSummary {
  std::size_t subjects = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// Standard error of the mean, sd / sqrt(n).
  double std_error = 0.0;
  /// Total floor truncations across all paths.
  std::size_t floor_hit_count = 0;
};

/// Cross-subject summary of R̂_i(t).
WeightSummary weight_diagnostics(std::span<const LikelihoodRatioPath> paths, double t);

}  // namespace tamsm
