#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tamsm {

/// Right-continuous piecewise-constant path on [0, inf).
///
/// Holds `initial` on [0, t_0) and `values[k]` on [t_k, t_{k+1}). Jump times
/// are strictly increasing. Used for counting processes, cumulative
/// intensities, likelihood ratios and cumulative hazards.
class StepFunction {
 public:
  StepFunction() = default;
  explicit StepFunction(double initial) : initial_(initial) {}
  StepFunction(double initial, std::vector<double> times,
               std::vector<double> values);

  /// Appends a change point; `t` must exceed the last stored time.
  void push(double t, double value);

  /// Value at t (right-continuous).
  double at(double t) const;
  /// Left limit at t: the value on an interval ending at t.
  double left_limit(double t) const;

  double initial() const noexcept { return initial_; }
  double final_value() const noexcept {
    return values_.empty() ? initial_ : values_.back();
  }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

  /// Number of change points with time in [0, t].
  std::size_t count_until(double t) const;

  /// Change points where the value actually moves.
  StepFunction compressed() const;

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  double initial_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Counting process with unit jumps at the given non-decreasing times; tied
/// times produce a single change point of the summed size.
StepFunction counting_process(std::span<const double> jump_times);

}  // namespace tamsm
