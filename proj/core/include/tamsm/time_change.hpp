#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tamsm/acceleration.hpp"
#include "tamsm/cohort.hpp"
#include "tamsm/step_function.hpp"

namespace tamsm {

/// Continuous, strictly increasing piecewise-linear map with Γ(0) = 0.
///
/// Segment k starts at knot (t_k, Γ(t_k)) and has slope s_k > 0; the last
/// segment extends to infinity.
class TimeChange {
 public:
  TimeChange() : TimeChange({0.0}, {0.0}, {1.0}) {}
  TimeChange(std::vector<double> knot_times, std::vector<double> knot_values,
             std::vector<double> slopes);

  static TimeChange linear(double slope) { return TimeChange({0.0}, {0.0}, {slope}); }

  double operator()(double t) const;

  std::span<const double> knot_times() const noexcept { return knot_times_; }
  std::span<const double> knot_values() const noexcept { return knot_values_; }
  std::span<const double> slopes() const noexcept { return slopes_; }

  friend bool operator==(const TimeChange&, const TimeChange&) = default;

 private:
  std::vector<double> knot_times_;
  std::vector<double> knot_values_;
  std::vector<double> slopes_;
};

/// Exact solution of Γ(t) = ∫_0^t g(Γ(s)) ds for a piecewise-constant g on
/// the observational clock. The rate is read from the subject's left-limit
/// covariate state; each change of a driving covariate at observational time
/// u becomes a knot at hypothetical time Γ^{-1}(u).
TimeChange gamma_from_rate(const Acceleration& accel, const SubjectPath& subject);

/// Piecewise-linear inverse; knots swap coordinates and slopes invert.
TimeChange gamma_inverse(const TimeChange& gamma);

/// Ž(t) = Z(Γ(t)): a jump of `path` at s moves to Γ^{-1}(s).
StepFunction shift_path(const StepFunction& path, const TimeChange& gamma);

struct IntensityCheck {
  double lambda = 0.0;
  double horizon = 0.0;
  std::size_t paths = 0;
  double empirical_mean = 0.0;
  /// λ Γ(τ) = ∫_0^τ ǧ λ̌ ds for a homogeneous base process.
  double predicted = 0.0;
  /// Poisson standard error of the mean, sqrt(predicted / paths).
  double std_error = 0.0;
  double z = 0.0;
  bool pass = false;
};

/// Monte-Carlo check of the intensity of a time-changed homogeneous counting
/// process: simulates `paths` rate-λ processes on the observational clock,
/// time-changes each by the Γ of `subject` under `accel`, and compares the
/// mean count on [0, τ] with the prediction. Fails beyond 4 standard errors.
IntensityCheck mc_check_intensity(double lambda, const Acceleration& accel,
                                  const SubjectPath& subject, double horizon,
                                  std::size_t paths, std::uint64_t seed,
                                  unsigned threads = 0);

/// Convenience overload for subject-free specs (constant factors only).
IntensityCheck mc_check_intensity(double lambda, const AccelerationSpec& spec,
                                  double horizon, std::size_t paths,
                                  std::uint64_t seed, unsigned threads = 0);

}  // namespace tamsm
