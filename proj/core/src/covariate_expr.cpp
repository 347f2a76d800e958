#include "tamsm/covariate_expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "tamsm/error.hpp"
#include "tamsm/text_io.hpp"

namespace tamsm {

bool compare(double lhs, Comparison op, double rhs) noexcept {
  switch (op) {
    case Comparison::gt: return lhs > rhs;
    case Comparison::ge: return lhs >= rhs;
    case Comparison::lt: return lhs < rhs;
    case Comparison::le: return lhs <= rhs;
    case Comparison::eq: return lhs == rhs;
    case Comparison::ne: return lhs != rhs;
  }
  return false;
}

std::string_view to_string(Comparison op) noexcept {
  switch (op) {
    case Comparison::gt: return ">";
    case Comparison::ge: return ">=";
    case Comparison::lt: return "<";
    case Comparison::le: return "<=";
    case Comparison::eq: return "==";
    case Comparison::ne: return "!=";
  }
  return "?";
}

Comparison parse_comparison(std::string_view text) {
  static constexpr std::array<std::pair<std::string_view, Comparison>, 6> ops{{
      {">=", Comparison::ge},
      {"<=", Comparison::le},
      {"==", Comparison::eq},
      {"!=", Comparison::ne},
      {">", Comparison::gt},
      {"<", Comparison::lt},
  }};
  for (auto [sym, op] : ops)
    if (text == sym) return op;
  throw ParseError("unknown comparison '" + std::string(text) + "'");
}

namespace {

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

}  // namespace

CovariateExpr CovariateExpr::parse(std::string_view text) {
  text = io::trim(text);
  if (text == "1") return intercept();
  if (text.size() > 3 && text.substr(0, 2) == "I(" && text.back() == ')') {
    auto inner = io::trim(text.substr(2, text.size() - 3));
    auto op_pos = inner.find_first_of("<>=!");
    if (op_pos == std::string_view::npos) {
      if (!valid_name(inner))
        throw ParseError("bad covariate name in '" + std::string(text) + "'");
      return indicator(std::string(inner), Comparison::ne, 0.0);
    }
    auto name = io::trim(inner.substr(0, op_pos));
    auto rest = inner.substr(op_pos);
    auto op_len = rest.find_first_not_of("<>=!");
    if (op_len == std::string_view::npos)
      throw ParseError("missing threshold in '" + std::string(text) + "'");
    Comparison op = parse_comparison(rest.substr(0, op_len));
    auto threshold = io::parse_double(rest.substr(op_len));
    if (!threshold || !valid_name(name))
      throw ParseError("malformed indicator '" + std::string(text) + "'");
    return indicator(std::string(name), op, *threshold);
  }
  if (!valid_name(text))
    throw ParseError("malformed covariate expression '" + std::string(text) + "'");
  return raw(std::string(text));
}

std::string CovariateExpr::to_string() const {
  switch (kind) {
    case Kind::intercept:
      return "1";
    case Kind::raw:
      return covariate;
    case Kind::indicator:
      return "I(" + covariate + std::string(tamsm::to_string(op)) +
             io::format_exact(threshold) + ")";
  }
  return {};
}

double CovariateExpr::apply(double covariate_value) const noexcept {
  switch (kind) {
    case Kind::intercept: return 1.0;
    case Kind::raw: return covariate_value;
    case Kind::indicator: return compare(covariate_value, op, threshold) ? 1.0 : 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

DesignSpec::DesignSpec(std::vector<CovariateExpr> terms, bool intercept) {
  auto is_intercept = [](const CovariateExpr& e) {
    return e.kind == CovariateExpr::Kind::intercept;
  };
  std::erase_if(terms, is_intercept);
  intercept_ = intercept;
  if (intercept) terms_.push_back(CovariateExpr::intercept());
  for (auto& t : terms) terms_.push_back(std::move(t));
  if (terms_.empty()) throw ParseError("design has no terms");
}

DesignSpec DesignSpec::parse(std::string_view text) {
  std::vector<CovariateExpr> terms;
  bool intercept = true;
  for (const auto& line : io::content_lines(text)) {
    for (auto field : io::split(line.text, ',')) {
      if (field.empty()) continue;
      if (field == "-1" || field == "0") {
        intercept = false;
        continue;
      }
      try {
        terms.push_back(CovariateExpr::parse(field));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), {}, line.number);
      }
    }
  }
  return DesignSpec(std::move(terms), intercept);
}

std::string DesignSpec::to_string() const {
  std::string out;
  for (const auto& t : terms_) {
    if (!out.empty()) out += ", ";
    out += t.to_string();
  }
  if (!intercept_) out = out.empty() ? "-1" : "-1, " + out;
  return out;
}

BoundDesign::BoundDesign(DesignSpec spec, const CovariateSchema& schema)
    : spec_(std::move(spec)) {
  for (const auto& term : spec_.terms()) {
    if (term.kind == CovariateExpr::Kind::intercept) {
      index_.push_back(-1);
    } else {
      index_.push_back(static_cast<std::ptrdiff_t>(schema.index_of(term.covariate)));
    }
  }
}

void BoundDesign::row(const SubjectPath& subject, double t,
                      std::span<double> out) const {
  const auto terms = spec_.terms();
  for (std::size_t k = 0; k < terms.size(); ++k) {
    double value = index_[k] < 0 ? 1.0
                                 : subject.covariate_left_limit(
                                       static_cast<std::size_t>(index_[k]), t);
    out[k] = terms[k].apply(value);
  }
}

std::vector<double> BoundDesign::row(const SubjectPath& subject, double t) const {
  std::vector<double> out(size());
  row(subject, t, out);
  return out;
}

std::vector<double> covariate_row(const SubjectPath& subject,
                                  const BoundDesign& design, double t) {
  return design.row(subject, t);
}

// ---------------------------------------------------------------------------

DesignTimeline::DesignTimeline(const BoundDesign& design,
                               const SubjectPath& subject)
    : width_(design.size()) {
  const auto terms = design.spec().terms();
  std::vector<double> state(subject.baseline().begin(), subject.baseline().end());
  auto emit_row = [&] {
    for (std::size_t k = 0; k < width_; ++k) {
      auto idx = design.covariate_of(k);
      rows_.push_back(
          terms[k].apply(idx < 0 ? 1.0 : state[static_cast<std::size_t>(idx)]));
    }
  };
  auto used = [&](std::int32_t cov) {
    for (std::size_t k = 0; k < width_; ++k)
      if (design.covariate_of(k) == cov) return true;
    return false;
  };
  emit_row();
  const auto events = subject.events();
  for (std::size_t e = 0; e < events.size();) {
    const double t = events[e].time;
    bool touched = false;
    for (; e < events.size() && events[e].time == t; ++e) {
      if (events[e].type == EventType::covariate_change && used(events[e].covariate)) {
        state[static_cast<std::size_t>(events[e].covariate)] = events[e].value;
        touched = true;
      }
    }
    if (touched) {
      change_times_.push_back(t);
      emit_row();
    }
  }
}

std::span<const double> DesignTimeline::at(double t) const {
  auto r = static_cast<std::size_t>(
      std::lower_bound(change_times_.begin(), change_times_.end(), t) -
      change_times_.begin());
  return segment(r);
}

std::span<const double> DesignTimeline::Cursor::at(double t) {
  const auto& ct = timeline_->change_times_;
  while (segment_ < ct.size() && ct[segment_] < t) ++segment_;
  return timeline_->segment(segment_);
}

}  // namespace tamsm
