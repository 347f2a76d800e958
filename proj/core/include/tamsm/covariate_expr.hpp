#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamsm/cohort.hpp"

namespace tamsm {

enum class Comparison : std::uint8_t { gt, ge, lt, le, eq, ne };

bool compare(double lhs, Comparison op, double rhs) noexcept;
std::string_view to_string(Comparison op) noexcept;
/// Accepts ">", ">=", "<", "<=", "==", "!=".
Comparison parse_comparison(std::string_view text);

/// A regressor built from one covariate: the intercept `1`, a raw covariate
/// `name`, or an indicator `I(name > 6)`.
struct CovariateExpr {
  enum class Kind : std::uint8_t { intercept, raw, indicator };

  Kind kind = Kind::intercept;
  std::string covariate;
  Comparison op = Comparison::ne;
  double threshold = 0.0;

  static CovariateExpr intercept() { return {}; }
  static CovariateExpr raw(std::string name) {
    return {Kind::raw, std::move(name), Comparison::ne, 0.0};
  }
  static CovariateExpr indicator(std::string name, Comparison op,
                                 double threshold) {
    return {Kind::indicator, std::move(name), op, threshold};
  }

  /// Parses `1`, `name`, `I(name)` (meaning name != 0) or `I(name op x)`.
  static CovariateExpr parse(std::string_view text);
  std::string to_string() const;

  /// Value given the covariate's left-limit value.
  double apply(double covariate_value) const noexcept;

  friend bool operator==(const CovariateExpr&, const CovariateExpr&) = default;
};

/// Ordered regressor list for the treatment-intensity model. The intercept,
/// when present, is always the first term.
class DesignSpec {
 public:
  DesignSpec() = default;
  /// `intercept` prepends `1` unless the list already holds it (it is then
  /// moved to the front).
  explicit DesignSpec(std::vector<CovariateExpr> terms, bool intercept = true);

  /// Terms separated by commas or newlines; `#` starts a comment line. `-1`
  /// disables the implicit intercept.
  static DesignSpec parse(std::string_view text);

  std::span<const CovariateExpr> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool has_intercept() const noexcept { return intercept_; }
  std::string to_string() const;

  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;

 private:
  std::vector<CovariateExpr> terms_;
  bool intercept_ = false;
};

/// A DesignSpec resolved against a cohort schema.
class BoundDesign {
 public:
  BoundDesign(DesignSpec spec, const CovariateSchema& schema);

  const DesignSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return spec_.size(); }

  /// L(t-): the regressor row evaluated on left-limit covariate values.
  void row(const SubjectPath& subject, double t, std::span<double> out) const;
  std::vector<double> row(const SubjectPath& subject, double t) const;

  /// Schema index used by term k; -1 for the intercept.
  std::ptrdiff_t covariate_of(std::size_t k) const { return index_[k]; }

 private:
  DesignSpec spec_;
  std::vector<std::ptrdiff_t> index_;
};

/// covariate_row(subject, design, t): L_i(t-).
std::vector<double> covariate_row(const SubjectPath& subject,
                                  const BoundDesign& design, double t);

/// Precomputed piecewise-constant design rows of one subject. Row r holds on
/// (change_times[r-1], change_times[r]] (left-limit convention), row 0 from
/// time 0.
class DesignTimeline {
 public:
  DesignTimeline(const BoundDesign& design, const SubjectPath& subject);

  std::size_t width() const noexcept { return width_; }
  /// Row valid at t (left-limit value).
  std::span<const double> at(double t) const;

  /// Sequential access for non-decreasing query times.
  class Cursor {
   public:
    explicit Cursor(const DesignTimeline& timeline) : timeline_(&timeline) {}
    std::span<const double> at(double t);

   private:
    const DesignTimeline* timeline_;
    std::size_t segment_ = 0;
  };

 private:
  std::span<const double> segment(std::size_t r) const {
    return {rows_.data() + r * width_, width_};
  }

  std::size_t width_;
  std::vector<double> change_times_;
  std::vector<double> rows_;
};

}  // namespace tamsm
