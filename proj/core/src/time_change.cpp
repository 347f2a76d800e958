#include "tamsm/time_change.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tamsm/error.hpp"
#include "tamsm/parallel.hpp"
#include "tamsm/random.hpp"

namespace tamsm {

TimeChange::TimeChange(std::vector<double> knot_times, std::vector<double> knot_values,
                       std::vector<double> slopes)
    : knot_times_(std::move(knot_times)),
      knot_values_(std::move(knot_values)),
      slopes_(std::move(slopes)) {
  if (knot_times_.empty() || knot_times_.size() != knot_values_.size() ||
      knot_times_.size() != slopes_.size())
    throw std::invalid_argument("TimeChange: knot/slope size mismatch");
  if (knot_times_.front() != 0.0 || knot_values_.front() != 0.0)
    throw std::invalid_argument("TimeChange: must start at (0, 0)");
  for (std::size_t k = 0; k < slopes_.size(); ++k) {
    if (!(slopes_[k] > 0.0) || !std::isfinite(slopes_[k]))
      throw ModelError("nonpositive rate in time change");
    if (k > 0 && !(knot_times_[k] > knot_times_[k - 1] &&
                   knot_values_[k] > knot_values_[k - 1]))
      throw std::invalid_argument("TimeChange: knots not strictly increasing");
  }
}

double TimeChange::operator()(double t) const {
  auto it = std::upper_bound(knot_times_.begin(), knot_times_.end(), t);
  std::size_t k = it == knot_times_.begin()
                      ? 0
                      : static_cast<std::size_t>(it - knot_times_.begin()) - 1;
  return knot_values_[k] + slopes_[k] * (t - knot_times_[k]);
}

TimeChange gamma_from_rate(const Acceleration& accel, const SubjectPath& subject) {
  std::vector<double> state(subject.baseline().begin(), subject.baseline().end());
  std::vector<double> times{0.0}, values{0.0}, slopes;

  const auto events = subject.events();
  std::size_t e = 0;
  auto next_driver = [&] {
    while (e < events.size() &&
           !(events[e].type == EventType::covariate_change &&
             accel.depends_on(static_cast<std::size_t>(events[e].covariate))))
      ++e;
  };

  double rate = accel.rate(state);
  if (!(rate > 0.0)) throw ModelError("nonpositive rate");
  slopes.push_back(rate);
  next_driver();
  while (e < events.size()) {
    const double u = events[e].time;  // observational clock
    for (; e < events.size() && events[e].time == u; ++e)
      if (events[e].type == EventType::covariate_change)
        state[static_cast<std::size_t>(events[e].covariate)] = events[e].value;
    next_driver();
    const double next_rate = accel.rate(state);
    if (!(next_rate > 0.0)) throw ModelError("nonpositive rate");
    if (next_rate == slopes.back()) continue;
    // Within the current segment Γ grows with slope slopes.back() from
    // (times.back(), values.back()), so it reaches u at this hypothetical time.
    times.push_back(times.back() + (u - values.back()) / slopes.back());
    values.push_back(u);
    slopes.push_back(next_rate);
  }
  return TimeChange(std::move(times), std::move(values), std::move(slopes));
}

TimeChange gamma_inverse(const TimeChange& gamma) {
  std::vector<double> times(gamma.knot_values().begin(), gamma.knot_values().end());
  std::vector<double> values(gamma.knot_times().begin(), gamma.knot_times().end());
  std::vector<double> slopes;
  slopes.reserve(gamma.slopes().size());
  for (double s : gamma.slopes()) slopes.push_back(1.0 / s);
  return TimeChange(std::move(times), std::move(values), std::move(slopes));
}

StepFunction shift_path(const StepFunction& path, const TimeChange& gamma) {
  const TimeChange inverse = gamma_inverse(gamma);
  std::vector<double> times;
  times.reserve(path.size());
  for (double s : path.times()) times.push_back(inverse(s));
  return StepFunction(path.initial(), std::move(times),
                      std::vector<double>(path.values().begin(), path.values().end()));
}

IntensityCheck mc_check_intensity(double lambda, const Acceleration& accel,
                                  const SubjectPath& subject, double horizon,
                                  std::size_t paths, std::uint64_t seed,
                                  unsigned threads) {
  if (!(lambda > 0.0)) throw ModelError("lambda must be positive");
  if (!(horizon > 0.0)) throw ModelError("horizon must be positive");
  if (paths < 100) throw ModelError("at least 100 paths required");

  const TimeChange gamma = gamma_from_rate(accel, subject);
  const double observed_horizon = gamma(horizon);

  std::vector<double> counts(paths);
  parallel_for(paths, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, 0x7c, i));
    std::vector<double> arrivals;
    for (double t = rng.exponential() / lambda; t <= observed_horizon;
         t += rng.exponential() / lambda)
      arrivals.push_back(t);
    const StepFunction shifted = shift_path(counting_process(arrivals), gamma);
    counts[i] = shifted.at(horizon);
  });

  IntensityCheck report;
  report.lambda = lambda;
  report.horizon = horizon;
  report.paths = paths;
  double sum = 0.0;
  for (double c : counts) sum += c;
  report.empirical_mean = sum / static_cast<double>(paths);
  report.predicted = lambda * observed_horizon;
  report.std_error = std::sqrt(report.predicted / static_cast<double>(paths));
  report.z = (report.empirical_mean - report.predicted) / report.std_error;
  report.pass = std::abs(report.z) <= 4.0;
  return report;
}

IntensityCheck mc_check_intensity(double lambda, const AccelerationSpec& spec,
                                  double horizon, std::size_t paths,
                                  std::uint64_t seed, unsigned threads) {
  const CovariateSchema empty;
  return mc_check_intensity(lambda, Acceleration(spec, empty),
                            SubjectPath("template", {}, {}), horizon, paths, seed,
                            threads);
}

}  // namespace tamsm
