#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tamsm {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class CovariateKind : std::uint8_t {
  baseline,  ///< fixed at entry
  process,   ///< step process changed by `cov` events
};

struct CovariateDecl {
  std::string name;
  CovariateKind kind = CovariateKind::baseline;

  friend bool operator==(const CovariateDecl&, const CovariateDecl&) = default;
};

/// Declared covariate names. A covariate's position in the schema is its
/// index into SubjectPath::baseline and Event::covariate.
class CovariateSchema {
 public:
  CovariateSchema() = default;
  explicit CovariateSchema(std::vector<CovariateDecl> decls);

  /// Declares a new covariate and returns its index.
  std::size_t add(std::string name, CovariateKind kind);

  std::optional<std::size_t> find(std::string_view name) const;
  /// Index of `name`; throws ParseError("unknown covariate ...") otherwise.
  std::size_t index_of(std::string_view name) const;

  const CovariateDecl& operator[](std::size_t i) const { return decls_[i]; }
  std::size_t size() const noexcept { return decls_.size(); }
  std::span<const CovariateDecl> decls() const noexcept { return decls_; }

  friend bool operator==(const CovariateSchema&,
                         const CovariateSchema&) = default;

 private:
  std::vector<CovariateDecl> decls_;
};

enum class EventType : std::uint8_t {
  treatment,
  outcome,
  censor,
  covariate_change,
};

struct Event {
  double time = 0.0;
  EventType type = EventType::treatment;
  /// Schema index for covariate_change; -1 otherwise.
  std::int32_t covariate = -1;
  /// New process value for covariate_change.
  double value = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class Terminal : std::uint8_t { none, outcome, censor };

/// One subject: baseline values plus a time-ordered event stream.
///
/// `baseline[j]` holds the value of covariate j at entry; for process
/// covariates this is the initial state that later `cov` events overwrite.
/// The constructor validates the path and throws ParseError on violations.
class SubjectPath {
 public:
  SubjectPath() = default;
  SubjectPath(std::string id, std::vector<double> baseline,
              std::vector<Event> events, std::string outcome_label = {});

  const std::string& id() const noexcept { return id_; }
  std::span<const double> baseline() const noexcept { return baseline_; }
  std::span<const Event> events() const noexcept { return events_; }
  const std::string& outcome_label() const noexcept { return outcome_label_; }

  /// +inf when untreated.
  double treatment_time() const noexcept { return treatment_time_; }
  /// Time of the outcome or censor event; +inf when neither is recorded.
  double exit_time() const noexcept { return exit_time_; }
  Terminal terminal() const noexcept { return terminal_; }
  bool treated() const noexcept { return treatment_time_ < kInfinity; }
  bool had_outcome() const noexcept { return terminal_ == Terminal::outcome; }

  /// Value of covariate `index` at t- (strictly before t).
  double covariate_left_limit(std::size_t index, double t) const;

  /// Times of covariate_change events, in order.
  std::vector<double> covariate_change_times() const;

  /// Copy under a new identifier (used for bootstrap resamples).
  SubjectPath with_id(std::string id) const {
    SubjectPath copy = *this;
    copy.id_ = std::move(id);
    return copy;
  }

  friend bool operator==(const SubjectPath&, const SubjectPath&) = default;

 private:
  std::string id_;
  std::vector<double> baseline_;
  std::vector<Event> events_;
  std::string outcome_label_;
  double treatment_time_ = kInfinity;
  double exit_time_ = kInfinity;
  Terminal terminal_ = Terminal::none;
};

/// Immutable collection of subjects over the study period [0, horizon].
class Cohort {
 public:
  Cohort() = default;
  Cohort(std::vector<SubjectPath> subjects, double horizon,
         CovariateSchema schema);

  std::span<const SubjectPath> subjects() const noexcept { return subjects_; }
  const SubjectPath& operator[](std::size_t i) const { return subjects_[i]; }
  std::size_t size() const noexcept { return subjects_.size(); }
  bool empty() const noexcept { return subjects_.empty(); }
  double horizon() const noexcept { return horizon_; }
  const CovariateSchema& schema() const noexcept { return schema_; }

  friend bool operator==(const Cohort&, const Cohort&) = default;

 private:
  std::vector<SubjectPath> subjects_;
  double horizon_ = 0.0;
  CovariateSchema schema_;
};

/// Parses the baseline and events CSV sources. Every baseline covariate in
/// `schema` needs a column; process covariates may carry an initial value
/// column (default 0). When `horizon` is absent the largest event time is
/// used.
Cohort parse_cohort(std::string_view baseline_csv, std::string_view events_csv,
                    const CovariateSchema& schema,
                    std::optional<double> horizon = std::nullopt);

/// Schema implied by the sources: baseline columns not named by any `cov`
/// event are baseline covariates; every `cov` name is a process covariate.
CovariateSchema infer_schema(std::string_view baseline_csv,
                             std::string_view events_csv);

std::string write_baseline_csv(const Cohort& cohort);
std::string write_events_csv(const Cohort& cohort);

enum class RiskTarget : std::uint8_t { treatment, outcome };

/// Left-continuous at-risk indicator. For treatment the subject is at risk
/// through min(treatment, exit); for the outcome through exit.
bool at_risk(const SubjectPath& subject, RiskTarget target, double t);

/// Last time at which the subject is at risk for the target.
double risk_end(const SubjectPath& subject, RiskTarget target);

struct PooledTimes {
  std::vector<double> times;
  std::vector<std::size_t> multiplicity;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
};

/// Distinct times at which any subject has an event of `type`, with tie
/// multiplicities. For covariate_change, `covariate` restricts to one index.
PooledTimes pooled_event_times(const Cohort& cohort, EventType type,
                               std::optional<std::size_t> covariate = {});

struct CohortSummary {
  std::size_t subjects = 0;
  std::size_t treated = 0;
  std::size_t outcomes = 0;
  std::size_t censored = 0;
  std::size_t no_terminal = 0;
  std::map<std::string, std::size_t> outcome_labels;
};

CohortSummary summarize(const Cohort& cohort);

}  // namespace tamsm
