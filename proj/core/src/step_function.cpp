#include "tamsm/step_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace tamsm {

StepFunction::StepFunction(double initial, std::vector<double> times,
                           std::vector<double> values)
    : initial_(initial), times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size())
    throw std::invalid_argument("StepFunction: times/values length mismatch");
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (!(times_[k] > times_[k - 1]))
      throw std::invalid_argument("StepFunction: times not strictly increasing");
}

void StepFunction::push(double t, double value) {
  if (!times_.empty() && !(t > times_.back()))
    throw std::invalid_argument("StepFunction::push: time not increasing");
  times_.push_back(t);
  values_.push_back(value);
}

double StepFunction::at(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

std::size_t StepFunction::count_until(double t) const {
  return static_cast<std::size_t>(
      std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
}

StepFunction StepFunction::compressed() const {
  StepFunction out(initial_);
  double current = initial_;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (values_[k] != current) {
      out.push(times_[k], values_[k]);
      current = values_[k];
    }
  }
  return out;
}

StepFunction counting_process(std::span<const double> jump_times) {
  StepFunction out(0.0);
  double count = 0.0;
  for (std::size_t k = 0; k < jump_times.size(); ++k) {
    count += 1.0;
    if (k + 1 < jump_times.size() && jump_times[k + 1] == jump_times[k])
      continue;
    out.push(jump_times[k], count);
  }
  return out;
}

}  // namespace tamsm
