#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "tamsm/acceleration.hpp"
#include "tamsm/cohort.hpp"
#include "tamsm/covariate_expr.hpp"
#include "tamsm/estimators.hpp"

namespace tamsm {

/// Synthetic waiting-list cohort with confounded treatment (transplant) and
/// outcome (death or withdrawal).
///
/// Covariates: baseline `x_lci` (comorbidity index; > 6 is severe) and
/// `disease` (0 diabetes, 1 vascular, 2 other); processes `phys` (physical
/// function on 0..100, re-reported every `phys_interval` years) and
/// `dialysis2yr` (0 -> 1 once two years on dialysis are completed, provided
/// the subject is still untreated then).
///
/// The treatment intensity is additive in
///   (1, I(x_lci>6), I(disease==0), phys, I(dialysis2yr!=0))
/// evaluated at t-, so `DgpConfig::treatment_design()` specifies it
/// correctly. The outcome hazard uses the same regressors plus
/// `outcome_treated * I(treated)`, with the dialysis term switched off
/// after treatment.
struct DgpConfig {
  double horizon = 10.0;
  /// Entry times are uniform on [0, entry_span]; follow-up is administratively
  /// censored at horizon - entry.
  double entry_span = 6.0;

  double p_severe = 0.112;
  std::array<double, 3> disease_probs{0.096, 0.359, 0.545};

  double p_dialysis_at_entry = 0.6;
  /// Years already on dialysis at entry ~ U[0, dialysis_prior_max].
  double dialysis_prior_max = 3.75;
  /// Rate at which subjects not on dialysis start it.
  double dialysis_start_rate = 0.4;

  double phys_mean = 72.0;
  double phys_sd = 20.0;
  double phys_interval = 0.5;
  double phys_drift = 3.0;
  double phys_noise_sd = 6.0;

  // Treatment intensity coefficients (per year).
  double treat_intercept = 1.0;
  double treat_severe = -0.20;
  double treat_diabetes = -0.10;
  double treat_phys = 0.004;
  double treat_dialysis2yr = -0.10;

  // Outcome hazard coefficients (per year).
  double outcome_intercept = 0.25;
  double outcome_severe = 0.10;
  double outcome_diabetes = 0.03;
  double outcome_phys = -0.0002;
  /// Applies only while untreated: a graft ends dialysis.
  double outcome_dialysis2yr = 0.70;
  double outcome_treated = -0.225;

  /// Fraction of outcome events labelled "withdrawal" (the rest "death").
  double withdrawal_fraction = 43.0 / 104.0;

  /// Throws ParseError when a probability or intensity is out of range for
  /// some reachable covariate configuration.
  void validate() const;

  /// The regressor list that correctly specifies the treatment intensity.
  static DesignSpec treatment_design();
  /// Schema of simulated cohorts: x_lci, disease, phys, dialysis2yr.
  static CovariateSchema schema();
};

/// key=value lines using the field names of DgpConfig; unspecified keys keep
/// their defaults. `disease_probs` takes three comma-separated values.
DgpConfig parse_dgp_config(std::string_view source);
std::string write_dgp_config(const DgpConfig& cfg);

/// n i.i.d. subjects by exact competing-exponential sampling between
/// covariate change times. Deterministic in (cfg, n, seed) for any thread
/// count.
Cohort simulate_cohort(const DgpConfig& cfg, std::size_t n, std::uint64_t seed,
                       unsigned threads = 0);

/// The same mechanism with the treatment intensity multiplied by g(t-);
/// every other law is unchanged. With g ≡ 1 the output equals
/// simulate_cohort bit for bit.
Cohort simulate_hypothetical(const DgpConfig& cfg, const AccelerationSpec& accel,
                             std::size_t n, std::uint64_t seed, unsigned threads = 0);

/// Unweighted Kaplan–Meier estimate evaluated on `grid`.
SurvivalCurve oracle_survival(const Cohort& cohort, std::span<const double> grid);

}  // namespace tamsm
