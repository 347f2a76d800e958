#include "tamsm/cohort.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "tamsm/error.hpp"
#include "tamsm/text_io.hpp"

namespace tamsm {

// ---------------------------------------------------------------------------
// CovariateSchema

CovariateSchema::CovariateSchema(std::vector<CovariateDecl> decls) {
  for (auto& d : decls) add(std::move(d.name), d.kind);
}

std::size_t CovariateSchema::add(std::string name, CovariateKind kind) {
  if (name.empty()) throw ParseError("empty covariate name");
  if (find(name)) throw ParseError("duplicate covariate declaration: " + name);
  decls_.push_back({std::move(name), kind});
  return decls_.size() - 1;
}

std::optional<std::size_t> CovariateSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < decls_.size(); ++i)
    if (decls_[i].name == name) return i;
  return std::nullopt;
}

std::size_t CovariateSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ParseError("unknown covariate: " + std::string(name));
}

// ---------------------------------------------------------------------------
// SubjectPath

SubjectPath::SubjectPath(std::string id, std::vector<double> baseline,
                         std::vector<Event> events, std::string outcome_label)
    : id_(std::move(id)),
      baseline_(std::move(baseline)),
      events_(std::move(events)),
      outcome_label_(std::move(outcome_label)) {
  double previous = 0.0;
  for (const Event& e : events_) {
    if (e.time < 0.0) throw ParseError("negative time", id_);
    if (!(e.time > 0.0)) throw ParseError("event at time 0", id_);
    if (e.time < previous) throw ParseError("events not time-ordered", id_);
    if (terminal_ != Terminal::none && e.time > exit_time_)
      throw ParseError("event after terminal event", id_);
    previous = e.time;
    switch (e.type) {
      case EventType::treatment:
        if (treated()) throw ParseError("more than one treatment event", id_);
        treatment_time_ = e.time;
        break;
      case EventType::outcome:
      case EventType::censor:
        if (terminal_ != Terminal::none)
          throw ParseError("more than one terminal event", id_);
        terminal_ = e.type == EventType::outcome ? Terminal::outcome
                                                 : Terminal::censor;
        exit_time_ = e.time;
        break;
      case EventType::covariate_change:
        if (e.covariate < 0 ||
            static_cast<std::size_t>(e.covariate) >= baseline_.size())
          throw ParseError("covariate index out of range", id_);
        break;
    }
  }
}

double SubjectPath::covariate_left_limit(std::size_t index, double t) const {
  double value = baseline_[index];
  for (const Event& e : events_) {
    if (!(e.time < t)) break;
    if (e.type == EventType::covariate_change &&
        static_cast<std::size_t>(e.covariate) == index)
      value = e.value;
  }
  return value;
}

std::vector<double> SubjectPath::covariate_change_times() const {
  std::vector<double> out;
  for (const Event& e : events_)
    if (e.type == EventType::covariate_change) out.push_back(e.time);
  return out;
}

// ---------------------------------------------------------------------------
// Cohort

Cohort::Cohort(std::vector<SubjectPath> subjects, double horizon,
               CovariateSchema schema)
    : subjects_(std::move(subjects)),
      horizon_(horizon),
      schema_(std::move(schema)) {
  if (!(horizon_ > 0.0)) throw ParseError("horizon must be positive");
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(subjects_.size());
  for (const SubjectPath& s : subjects_) {
    if (!seen.emplace(s.id(), 0).second)
      throw ParseError("duplicate subject_id", s.id());
    if (s.baseline().size() != schema_.size())
      throw ParseError("baseline width does not match schema", s.id());
    if (!s.events().empty() && s.events().back().time > horizon_)
      throw ParseError("event after horizon", s.id());
  }
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

struct ParsedEvent {
  Event event;
  std::size_t line;
  std::string label;
};

EventType parse_kind(std::string_view kind, const std::string& id,
                     std::size_t line) {
  if (kind == "treat") return EventType::treatment;
  if (kind == "outcome") return EventType::outcome;
  if (kind == "censor") return EventType::censor;
  if (kind == "cov") return EventType::covariate_change;
  throw ParseError("unknown event kind '" + std::string(kind) + "'", id, line);
}

std::vector<std::string_view> header_of(const std::vector<io::Line>& lines,
                                        std::string_view what) {
  if (lines.empty()) throw ParseError(std::string(what) + " CSV is empty");
  auto header = io::split(lines.front().text, ',');
  if (header.empty() || header.front() != "subject_id")
    throw ParseError(std::string(what) + " CSV header must start with subject_id",
                     {}, lines.front().number);
  return header;
}

}  // namespace

Cohort parse_cohort(std::string_view baseline_csv, std::string_view events_csv,
                    const CovariateSchema& schema,
                    std::optional<double> horizon) {
  const auto baseline_lines = io::content_lines(baseline_csv);
  const auto header = header_of(baseline_lines, "baseline");

  // column -> schema index
  std::vector<std::size_t> column_index;
  std::vector<bool> has_column(schema.size(), false);
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto idx = schema.find(header[c]);
    if (!idx)
      throw ParseError("unknown covariate: " + std::string(header[c]), {},
                       baseline_lines.front().number);
    if (has_column[*idx])
      throw ParseError("duplicate column: " + std::string(header[c]), {},
                       baseline_lines.front().number);
    has_column[*idx] = true;
    column_index.push_back(*idx);
  }
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (!has_column[j] && schema[j].kind == CovariateKind::baseline)
      throw ParseError("baseline column missing for covariate: " +
                       schema[j].name);

  std::vector<std::string> ids;
  std::vector<std::vector<double>> baselines;
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 1; r < baseline_lines.size(); ++r) {
    const auto& line = baseline_lines[r];
    auto fields = io::split(line.text, ',');
    std::string id(fields.front());
    if (id.empty()) throw ParseError("empty subject_id", {}, line.number);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       id, line.number);
    if (row_of.count(id)) throw ParseError("duplicate subject_id", id, line.number);
    std::vector<double> values(schema.size(), 0.0);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto v = io::parse_double(fields[c]);
      if (!v)
        throw ParseError("non-numeric value '" + std::string(fields[c]) +
                             "' for " + std::string(header[c]),
                         id, line.number);
      values[column_index[c - 1]] = *v;
    }
    row_of.emplace(id, ids.size());
    ids.push_back(std::move(id));
    baselines.push_back(std::move(values));
  }

  const auto event_lines = io::content_lines(events_csv);
  std::vector<std::vector<ParsedEvent>> events(ids.size());
  if (!event_lines.empty()) {
    auto eh = io::split(event_lines.front().text, ',');
    const std::vector<std::string_view> expected = {"subject_id", "time", "kind",
                                                    "name", "value"};
    if (eh != expected)
      throw ParseError("events CSV header must be subject_id,time,kind,name,value",
                       {}, event_lines.front().number);
  }
  double max_time = 0.0;
  for (std::size_t r = 1; r < event_lines.size(); ++r) {
    const auto& line = event_lines[r];
    auto fields = io::split(line.text, ',');
    std::string id(fields.front());
    if (fields.size() != 5)
      throw ParseError("expected 5 fields, found " + std::to_string(fields.size()),
                       id, line.number);
    auto row = row_of.find(id);
    if (row == row_of.end())
      throw ParseError("event for subject without baseline row", id, line.number);
    auto time = io::parse_double(fields[1]);
    if (!time) throw ParseError("non-numeric time", id, line.number);
    if (*time < 0.0) throw ParseError("negative time", id, line.number);
    if (*time == 0.0) throw ParseError("event at time 0", id, line.number);
    ParsedEvent pe{{*time, parse_kind(fields[2], id, line.number), -1, 0.0},
                   line.number,
                   {}};
    if (pe.event.type == EventType::covariate_change) {
      auto idx = schema.find(fields[3]);
      if (!idx)
        throw ParseError("unknown covariate: " + std::string(fields[3]), id,
                         line.number);
      if (schema[*idx].kind != CovariateKind::process)
        throw ParseError("cov event for baseline covariate: " +
                             std::string(fields[3]),
                         id, line.number);
      auto value = io::parse_double(fields[4]);
      if (!value) throw ParseError("non-numeric cov value", id, line.number);
      pe.event.covariate = static_cast<std::int32_t>(*idx);
      pe.event.value = *value;
    } else if (pe.event.type == EventType::outcome) {
      pe.label = std::string(fields[3]);
    }
    max_time = std::max(max_time, *time);
    events[row->second].push_back(std::move(pe));
  }

  std::vector<SubjectPath> subjects;
  subjects.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& evs = events[i];
    std::stable_sort(evs.begin(), evs.end(),
                     [](const ParsedEvent& a, const ParsedEvent& b) {
                       return a.event.time < b.event.time;
                     });
    // Report ordering violations against the file line that caused them.
    double exit = kInfinity;
    bool treated = false;
    std::string label;
    for (const auto& pe : evs) {
      if (pe.event.time > exit)
        throw ParseError("event after terminal event", ids[i], pe.line);
      switch (pe.event.type) {
        case EventType::treatment:
          if (treated)
            throw ParseError("more than one treatment event", ids[i], pe.line);
          treated = true;
          break;
        case EventType::outcome:
        case EventType::censor:
          if (exit < kInfinity)
            throw ParseError("more than one terminal event", ids[i], pe.line);
          exit = pe.event.time;
          if (pe.event.type == EventType::outcome) label = pe.label;
          break;
        case EventType::covariate_change:
          break;
      }
    }
    std::vector<Event> plain;
    plain.reserve(evs.size());
    for (const auto& pe : evs) plain.push_back(pe.event);
    subjects.emplace_back(ids[i], std::move(baselines[i]), std::move(plain),
                          std::move(label));
  }

  double h = horizon.value_or(max_time > 0.0 ? max_time : 1.0);
  if (horizon && max_time > *horizon)
    for (const auto& s : subjects)
      if (!s.events().empty() && s.events().back().time > *horizon)
        throw ParseError("event after horizon", s.id());
  return Cohort(std::move(subjects), h, schema);
}

CovariateSchema infer_schema(std::string_view baseline_csv,
                             std::string_view events_csv) {
  std::vector<std::string> process_names;
  std::set<std::string, std::less<>> process_set;
  const auto event_lines = io::content_lines(events_csv);
  for (std::size_t r = 1; r < event_lines.size(); ++r) {
    auto fields = io::split(event_lines[r].text, ',');
    if (fields.size() >= 4 && fields[2] == "cov" && !fields[3].empty() &&
        process_set.emplace(fields[3]).second)
      process_names.emplace_back(fields[3]);
  }
  CovariateSchema schema;
  const auto baseline_lines = io::content_lines(baseline_csv);
  const auto header = header_of(baseline_lines, "baseline");
  for (std::size_t c = 1; c < header.size(); ++c) {
    bool is_process = process_set.count(header[c]) > 0;
    schema.add(std::string(header[c]),
               is_process ? CovariateKind::process : CovariateKind::baseline);
  }
  for (const auto& name : process_names)
    if (!schema.find(name)) schema.add(name, CovariateKind::process);
  return schema;
}

std::string write_baseline_csv(const Cohort& cohort) {
  const auto& schema = cohort.schema();
  std::string out = "subject_id";
  for (const auto& d : schema.decls()) out += "," + d.name;
  out += '\n';
  for (const auto& s : cohort.subjects()) {
    out += s.id();
    for (double v : s.baseline()) out += "," + io::format_exact(v);
    out += '\n';
  }
  return out;
}

std::string write_events_csv(const Cohort& cohort) {
  const auto& schema = cohort.schema();
  std::string out = "subject_id,time,kind,name,value\n";
  for (const auto& s : cohort.subjects()) {
    for (const Event& e : s.events()) {
      out += s.id();
      out += ',';
      out += io::format_exact(e.time);
      switch (e.type) {
        case EventType::treatment:
          out += ",treat,,";
          break;
        case EventType::outcome:
          out += ",outcome," + s.outcome_label() + ",";
          break;
        case EventType::censor:
          out += ",censor,,";
          break;
        case EventType::covariate_change:
          out += ",cov," + schema[static_cast<std::size_t>(e.covariate)].name +
                 "," + io::format_exact(e.value);
          break;
      }
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Risk sets and pooled times

double risk_end(const SubjectPath& subject, RiskTarget target) {
  if (target == RiskTarget::treatment)
    return std::min(subject.treatment_time(), subject.exit_time());
  return subject.exit_time();
}

bool at_risk(const SubjectPath& subject, RiskTarget target, double t) {
  return t <= risk_end(subject, target);
}

PooledTimes pooled_event_times(const Cohort& cohort, EventType type,
                               std::optional<std::size_t> covariate) {
  std::vector<double> all;
  for (const auto& s : cohort.subjects())
    for (const Event& e : s.events())
      if (e.type == type &&
          (!covariate || static_cast<std::size_t>(e.covariate) == *covariate))
        all.push_back(e.time);
  std::sort(all.begin(), all.end());
  PooledTimes out;
  for (double t : all) {
    if (!out.times.empty() && out.times.back() == t) {
      ++out.multiplicity.back();
    } else {
      out.times.push_back(t);
      out.multiplicity.push_back(1);
    }
  }
  return out;
}

CohortSummary summarize(const Cohort& cohort) {
  CohortSummary s;
  s.subjects = cohort.size();
  for (const auto& p : cohort.subjects()) {
    if (p.treated()) ++s.treated;
    switch (p.terminal()) {
      case Terminal::outcome:
        ++s.outcomes;
        ++s.outcome_labels[p.outcome_label()];
        break;
      case Terminal::censor:
        ++s.censored;
        break;
      case Terminal::none:
        ++s.no_terminal;
        break;
    }
  }
  return s;
}

}  // namespace tamsm
