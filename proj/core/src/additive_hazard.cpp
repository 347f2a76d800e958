#include "tamsm/additive_hazard.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>

#include "tamsm/error.hpp"
#include "tamsm/parallel.hpp"

namespace tamsm {

std::vector<double> CumulativeCoefficients::cumulative(double t) const {
  std::vector<double> out(dimension(), 0.0);
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) {
    auto inc = increment(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += inc[j];
  }
  return out;
}

CumulativeCoefficients fit_aalen(const Cohort& cohort, const BoundDesign& design) {
  const PooledTimes pooled = pooled_event_times(cohort, EventType::treatment);
  if (pooled.empty()) throw ModelError("no treatment events in cohort");
  const std::size_t p = design.size();
  const std::size_t n = cohort.size();

  CumulativeCoefficients out;
  for (const auto& term : design.spec().terms()) out.terms.push_back(term.to_string());
  out.times = pooled.times;
  out.increments.assign(pooled.size() * p, 0.0);
  out.rank_skipped.assign(pooled.size(), 0);
  out.at_risk.assign(pooled.size(), 0);

  std::vector<DesignTimeline> timelines;
  timelines.reserve(n);
  for (const auto& s : cohort.subjects()) timelines.emplace_back(design, s);
  std::vector<DesignTimeline::Cursor> cursors;
  cursors.reserve(n);
  for (const auto& tl : timelines) cursors.emplace_back(tl);

  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  qr.setThreshold(kRankTolerance);

  for (std::size_t k = 0; k < pooled.size(); ++k) {
    const double t = pooled.times[k];
    std::erase_if(active, [&](std::size_t i) {
      return risk_end(cohort[i], RiskTarget::treatment) < t;
    });
    const auto m = static_cast<Eigen::Index>(active.size());
    out.at_risk[k] = active.size();
    for (Eigen::Index r = 0; r < m; ++r) {
      const std::size_t i = active[static_cast<std::size_t>(r)];
      auto row = cursors[i].at(t);
      for (std::size_t j = 0; j < p; ++j) X(r, static_cast<Eigen::Index>(j)) = row[j];
      y(r) = cohort[i].treatment_time() == t ? 1.0 : 0.0;
    }
    if (m < static_cast<Eigen::Index>(p)) {
      out.rank_skipped[k] = 1;
      continue;
    }
    qr.compute(X.topRows(m));
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
      out.rank_skipped[k] = 1;
      continue;
    }
    Eigen::VectorXd beta = qr.solve(y.head(m));
    for (std::size_t j = 0; j < p; ++j)
      out.increments[k * p + j] = beta(static_cast<Eigen::Index>(j));
  }
  return out;
}

CumulativeCoefficients fit_aalen(const Cohort& cohort, const DesignSpec& design) {
  return fit_aalen(cohort, BoundDesign(design, cohort.schema()));
}

namespace {

void check_design(const CumulativeCoefficients& coeffs, const BoundDesign& design) {
  if (coeffs.dimension() != design.size())
    throw ModelError("design mismatch: coefficients have " +
                     std::to_string(coeffs.dimension()) + " terms, design has " +
                     std::to_string(design.size()));
  const auto terms = design.spec().terms();
  for (std::size_t j = 0; j < terms.size(); ++j)
    if (terms[j].to_string() != coeffs.terms[j])
      throw ModelError("design mismatch: term " + std::to_string(j) + " is " +
                       terms[j].to_string() + ", coefficients have " +
                       coeffs.terms[j]);
}

// Number of pooled times at which the subject is at risk for treatment.
std::size_t risk_steps(const CumulativeCoefficients& coeffs, const SubjectPath& s) {
  const double end = risk_end(s, RiskTarget::treatment);
  return static_cast<std::size_t>(
      std::upper_bound(coeffs.times.begin(), coeffs.times.end(), end) -
      coeffs.times.begin());
}

}  // namespace

CumIntensityPath predict_cum_intensity(const CumulativeCoefficients& coeffs,
                                       const SubjectPath& subject,
                                       const BoundDesign& design) {
  check_design(coeffs, design);
  const std::size_t p = design.size();
  const std::size_t steps = risk_steps(coeffs, subject);
  DesignTimeline timeline(design, subject);
  DesignTimeline::Cursor cursor(timeline);

  CumIntensityPath out;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = coeffs.times[k];
    auto row = cursor.at(t);
    auto inc = coeffs.increment(k);
    double d = 0.0;
    for (std::size_t j = 0; j < p; ++j) d += row[j] * inc[j];
    if (d < 0.0) ++out.negative_increments;
    cumulative += d;
    out.path.push(t, cumulative);
  }
  return out;
}

std::vector<StepFunction> martingale_residuals(const Cohort& cohort,
                                               const CumulativeCoefficients& coeffs,
                                               const BoundDesign& design,
                                               unsigned threads) {
  check_design(coeffs, design);
  std::vector<StepFunction> out(cohort.size());
  parallel_for(cohort.size(), threads, [&](std::size_t i) {
    const SubjectPath& s = cohort[i];
    const auto intensity = predict_cum_intensity(coeffs, s, design);
    StepFunction residual(0.0);
    double m = 0.0;
    double previous = 0.0;
    const auto times = intensity.path.times();
    const auto values = intensity.path.values();
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double d_lambda = values[k] - previous;
      previous = values[k];
      const double d_n = s.treatment_time() == times[k] ? 1.0 : 0.0;
      m += d_n - d_lambda;
      residual.push(times[k], m);
    }
    out[i] = std::move(residual);
  });
  return out;
}

ResidualMeans residual_group_means(const Cohort& cohort,
                                   std::span<const StepFunction> residuals,
                                   const CovariateExpr& strata,
                                   std::span<const double> grid) {
  if (residuals.size() != cohort.size())
    throw ModelError("residual_group_means: one residual path per subject required");
  ResidualMeans out;
  if (cohort.empty()) return out;

  std::ptrdiff_t index = -1;
  if (strata.kind != CovariateExpr::Kind::intercept)
    index = static_cast<std::ptrdiff_t>(cohort.schema().index_of(strata.covariate));
  auto stratum_of = [&](const SubjectPath& s, double t) {
    double v = index < 0 ? 1.0
                         : s.covariate_left_limit(static_cast<std::size_t>(index), t);
    return strata.apply(v);
  };

  std::map<double, std::size_t> seen_overall;
  if (strata.kind == CovariateExpr::Kind::indicator) {
    seen_overall[0.0] = 0;
    seen_overall[1.0] = 0;
  }
  for (double t : grid) {
    std::map<double, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      auto& slot = acc[stratum_of(cohort[i], t)];
      slot.first += residuals[i].at(t);
      ++slot.second;
    }
    for (const auto& [stratum, sum_count] : acc) {
      out.rows.push_back({t, stratum, sum_count.first / static_cast<double>(sum_count.second),
                          sum_count.second});
      seen_overall[stratum] += sum_count.second;
    }
  }
  for (const auto& [stratum, count] : seen_overall)
    if (count == 0) out.empty_strata.push_back(stratum);
  return out;
}

}  // namespace tamsm
