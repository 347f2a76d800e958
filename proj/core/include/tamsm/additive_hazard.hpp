#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tamsm/cohort.hpp"
#include "tamsm/covariate_expr.hpp"
#include "tamsm/step_function.hpp"

namespace tamsm {

/// Relative pivot tolerance of the rank-revealing QR used by fit_aalen.
inline constexpr double kRankTolerance = 1e-10;

/// Aalen least-squares increments ΔB̂(t_k) at each pooled treatment time.
struct CumulativeCoefficients {
  std::vector<std::string> terms;
  std::vector<double> times;
  /// Row-major, times.size() x terms.size().
  std::vector<double> increments;
  /// 1 where the design at t_k was rank deficient and the increment is zero.
  std::vector<std::uint8_t> rank_skipped;
  /// Number of subjects at risk for treatment at t_k.
  std::vector<std::size_t> at_risk;

  std::size_t dimension() const noexcept { return terms.size(); }
  std::size_t size() const noexcept { return times.size(); }
  std::span<const double> increment(std::size_t k) const {
    return {increments.data() + k * dimension(), dimension()};
  }
  /// B̂(t) = sum of increments at times <= t.
  std::vector<double> cumulative(double t) const;
};

/// Aalen's additive hazards estimator for the treatment intensity
/// λ_i(t) = Y_i(t) L_i(t-)ᵀ β(t). At each pooled treatment time the increment
/// solves the least-squares problem over the treatment risk set with the 0/1
/// treatment indicator as response. Rank-deficient steps are skipped.
CumulativeCoefficients fit_aalen(const Cohort& cohort, const BoundDesign& design);
CumulativeCoefficients fit_aalen(const Cohort& cohort, const DesignSpec& design);

struct CumIntensityPath {
  StepFunction path{0.0};
  /// Increments L(t-)ᵀΔB̂ < 0; retained in the path.
  std::size_t negative_increments = 0;
};

/// Λ̂_i(t): increments Y_i(t_k) L_i(t_k-)ᵀ ΔB̂(t_k) at every pooled treatment
/// time while the subject is at risk for treatment.
CumIntensityPath predict_cum_intensity(const CumulativeCoefficients& coeffs,
                                       const SubjectPath& subject,
                                       const BoundDesign& design);

/// M̂_i(t) = ∫ Y_i dN_i - dΛ̂_i for every subject, in cohort order.
std::vector<StepFunction> martingale_residuals(const Cohort& cohort,
                                               const CumulativeCoefficients& coeffs,
                                               const BoundDesign& design,
                                               unsigned threads = 0);

struct ResidualMeans {
  struct Row {
    double time;
    double stratum;
    double mean;
    std::size_t count;
  };
  std::vector<Row> rows;
  /// Strata of an indicator expression that no subject falls into.
  std::vector<double> empty_strata;
};

/// Stratum-wise means of the residual paths at each time of `grid`. The
/// stratum of a subject at t is `strata` evaluated on its left-limit
/// covariates; indicator expressions always define strata {0, 1}.
ResidualMeans residual_group_means(const Cohort& cohort,
                                   std::span<const StepFunction> residuals,
                                   const CovariateExpr& strata,
                                   std::span<const double> grid);

}  // namespace tamsm
