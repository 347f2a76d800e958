#include "tamsm/reweighting.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tamsm/error.hpp"

namespace tamsm {

LikelihoodRatioPath likelihood_ratio_path(const SubjectPath& subject,
                                          const StepFunction& cum_intensity,
                                          const Acceleration& accel, double floor) {
  if (!(floor > 0.0)) throw ModelError("weight floor must be positive");
  LikelihoodRatioPath out;
  const auto times = cum_intensity.times();
  const auto values = cum_intensity.values();

  std::vector<double> state(subject.baseline().begin(), subject.baseline().end());
  const auto events = subject.events();
  std::size_t e = 0;

  double r = 1.0;
  double previous = cum_intensity.initial();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    for (; e < events.size() && events[e].time < t; ++e)
      if (events[e].type == EventType::covariate_change)
        state[static_cast<std::size_t>(events[e].covariate)] = events[e].value;
    const double d_lambda = values[k] - previous;
    previous = values[k];
    const double d_n = subject.treatment_time() == t ? 1.0 : 0.0;
    const double g = accel.rate(state);
    r *= 1.0 + (g - 1.0) * (d_n - d_lambda);
    if (r < floor) {
      r = floor;
      ++out.floor_hits;
    }
    out.path.push(t, r);
  }
  return out;
}

WeightSummary weight_diagnostics(std::span<const LikelihoodRatioPath> paths, double t) {
  if (paths.empty()) throw ModelError("weight_diagnostics: empty collection");
  WeightSummary s;
  s.subjects = paths.size();
  s.min = kInfinity;
  s.max = -kInfinity;
  double sum = 0.0;
  for (const auto& p : paths) {
    const double w = p.path.at(t);
    sum += w;
    s.min = std::min(s.min, w);
    s.max = std::max(s.max, w);
    s.floor_hit_count += p.floor_hits;
  }
  const double n = static_cast<double>(paths.size());
  s.mean = sum / n;
  double ss = 0.0;
  for (const auto& p : paths) {
    const double d = p.path.at(t) - s.mean;
    ss += d * d;
  }
  s.std_error = paths.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return s;
}

}  // namespace tamsm
