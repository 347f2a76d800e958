#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamsm/cohort.hpp"
#include "tamsm/covariate_expr.hpp"

namespace tamsm {

/// One multiplicative factor of a treatment-acceleration rate g.
///
///   constant            g = b
///   baseline_indicator  g = 1 + (b - 1) * I(cov op threshold)
///   process_indicator   g = 1 + (b - 1) * I(process(t-) op threshold)
struct AccelerationFactor {
  enum class Form : std::uint8_t { constant, baseline_indicator, process_indicator };

  Form form = Form::constant;
  double b = 1.0;
  std::string covariate;
  Comparison op = Comparison::gt;
  double threshold = 0.0;

  std::string to_string() const;
  friend bool operator==(const AccelerationFactor&,
                         const AccelerationFactor&) = default;
};

/// Product of factors; an empty product is the observational scenario g = 1.
class AccelerationSpec {
 public:
  AccelerationSpec() = default;
  explicit AccelerationSpec(std::vector<AccelerationFactor> factors);

  static AccelerationSpec constant(double b);
  static AccelerationSpec baseline_indicator(std::string covariate, Comparison op,
                                             double threshold, double b);
  static AccelerationSpec process_indicator(std::string process, Comparison op,
                                            double threshold, double b);

  std::span<const AccelerationFactor> factors() const noexcept { return factors_; }
  /// True when every factor has b == 1, so g is identically 1.
  bool is_identity() const noexcept;
  /// Label used in report files, e.g. "constant(b=2)".
  std::string label() const;

  friend bool operator==(const AccelerationSpec&,
                         const AccelerationSpec&) = default;

 private:
  std::vector<AccelerationFactor> factors_;
};

/// Parses the acceleration config: one stanza per line of whitespace-separated
/// key=value pairs, e.g. `form=baseline_indicator cov=x_lci threshold=6 b=2`.
/// A `form=product` stanza is accepted as a marker; all factor stanzas
/// multiply. Throws ParseError on unknown forms and nonpositive b.
AccelerationSpec parse_accel_spec(std::string_view source);
/// As above, additionally checking covariate names and kinds against `schema`.
AccelerationSpec parse_accel_spec(std::string_view source,
                                  const CovariateSchema& schema);

/// An AccelerationSpec resolved against a cohort schema.
class Acceleration {
 public:
  Acceleration(AccelerationSpec spec, const CovariateSchema& schema);

  const AccelerationSpec& spec() const noexcept { return spec_; }
  bool is_identity() const noexcept { return spec_.is_identity(); }

  /// Rate for a covariate state vector (schema-indexed, left-limit values).
  double rate(std::span<const double> state) const noexcept;

  /// Whether covariate `index` can change the rate.
  bool depends_on(std::size_t index) const noexcept;

 private:
  AccelerationSpec spec_;
  std::vector<std::ptrdiff_t> index_;
};

/// g_i(t) on the observational clock, using the subject's state at t-.
double evaluate_g(const Acceleration& accel, const SubjectPath& subject, double t);

}  // namespace tamsm
