#include "tamsm/acceleration.hpp"

#include <map>

#include "tamsm/error.hpp"
#include "tamsm/text_io.hpp"

namespace tamsm {

std::string AccelerationFactor::to_string() const {
  const std::string b_text = "b=" + io::format_exact(b);
  switch (form) {
    case Form::constant:
      return "constant(" + b_text + ")";
    case Form::baseline_indicator:
      return "baseline_indicator(" + covariate + std::string(tamsm::to_string(op)) +
             io::format_exact(threshold) + ";" + b_text + ")";
    case Form::process_indicator:
      return "process_indicator(" + covariate + std::string(tamsm::to_string(op)) +
             io::format_exact(threshold) + ";" + b_text + ")";
  }
  return {};
}

AccelerationSpec::AccelerationSpec(std::vector<AccelerationFactor> factors)
    : factors_(std::move(factors)) {
  for (const auto& f : factors_) {
    if (!(f.b > 0.0)) throw ParseError("nonpositive rate: b=" + io::format_exact(f.b));
    if (f.form != AccelerationFactor::Form::constant && f.covariate.empty())
      throw ParseError("indicator factor without covariate");
  }
}

AccelerationSpec AccelerationSpec::constant(double b) {
  return AccelerationSpec({{AccelerationFactor::Form::constant, b, {}, Comparison::gt, 0.0}});
}

AccelerationSpec AccelerationSpec::baseline_indicator(std::string covariate,
                                                      Comparison op,
                                                      double threshold, double b) {
  return AccelerationSpec({{AccelerationFactor::Form::baseline_indicator, b,
                            std::move(covariate), op, threshold}});
}

AccelerationSpec AccelerationSpec::process_indicator(std::string process,
                                                     Comparison op,
                                                     double threshold, double b) {
  return AccelerationSpec({{AccelerationFactor::Form::process_indicator, b,
                            std::move(process), op, threshold}});
}

bool AccelerationSpec::is_identity() const noexcept {
  for (const auto& f : factors_)
    if (f.b != 1.0) return false;
  return true;
}

std::string AccelerationSpec::label() const {
  if (factors_.empty()) return "constant(b=1)";
  std::string out;
  for (const auto& f : factors_) {
    if (!out.empty()) out += "*";
    out += f.to_string();
  }
  return out;
}

AccelerationSpec parse_accel_spec(std::string_view source) {
  std::vector<AccelerationFactor> factors;
  for (const auto& line : io::content_lines(source)) {
    std::map<std::string, std::string, std::less<>> kv;
    std::string_view rest = line.text;
    while (!rest.empty()) {
      auto end = rest.find_first_of(" \t");
      auto token = rest.substr(0, end);
      rest = end == std::string_view::npos ? std::string_view{}
                                           : io::trim(rest.substr(end));
      auto eq = token.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw ParseError("expected key=value, found '" + std::string(token) + "'",
                         {}, line.number);
      if (!kv.emplace(std::string(token.substr(0, eq)),
                      std::string(token.substr(eq + 1)))
               .second)
        throw ParseError("repeated key in stanza", {}, line.number);
    }
    auto take = [&](std::string_view key) -> std::optional<std::string> {
      auto it = kv.find(key);
      if (it == kv.end()) return std::nullopt;
      std::string v = it->second;
      kv.erase(it);
      return v;
    };
    auto number = [&](std::string_view key) -> std::optional<double> {
      auto v = take(key);
      if (!v) return std::nullopt;
      auto d = io::parse_double(*v);
      if (!d)
        throw ParseError("non-numeric " + std::string(key) + "='" + *v + "'", {},
                         line.number);
      return d;
    };

    auto form = take("form");
    if (!form) throw ParseError("stanza without form=", {}, line.number);
    if (*form == "product") {
      if (!kv.empty())
        throw ParseError("form=product takes no other keys", {}, line.number);
      continue;
    }

    AccelerationFactor f;
    if (*form == "constant") {
      f.form = AccelerationFactor::Form::constant;
    } else if (*form == "baseline_indicator") {
      f.form = AccelerationFactor::Form::baseline_indicator;
      auto cov = take("cov");
      auto threshold = number("threshold");
      if (!cov || !threshold)
        throw ParseError("baseline_indicator needs cov= and threshold=", {},
                         line.number);
      f.covariate = *cov;
      f.threshold = *threshold;
      f.op = Comparison::gt;
    } else if (*form == "process_indicator") {
      f.form = AccelerationFactor::Form::process_indicator;
      auto process = take("process");
      if (!process)
        throw ParseError("process_indicator needs process=", {}, line.number);
      f.covariate = *process;
      f.threshold = number("threshold").value_or(0.0);
      f.op = Comparison::ne;
    } else {
      throw ParseError("unknown form '" + *form + "'", {}, line.number);
    }
    if (auto op = take("op")) {
      if (f.form == AccelerationFactor::Form::constant)
        throw ParseError("op= not valid for form=constant", {}, line.number);
      try {
        f.op = parse_comparison(*op);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), {}, line.number);
      }
    }
    auto b = number("b");
    if (!b) throw ParseError("missing b=", {}, line.number);
    if (!(*b > 0.0))
      throw ParseError("nonpositive rate: b=" + io::format_exact(*b), {}, line.number);
    f.b = *b;
    if (!kv.empty())
      throw ParseError("unknown key '" + kv.begin()->first + "' for form=" + *form,
                       {}, line.number);
    factors.push_back(std::move(f));
  }
  if (factors.empty()) throw ParseError("acceleration spec has no factors");
  return AccelerationSpec(std::move(factors));
}

AccelerationSpec parse_accel_spec(std::string_view source,
                                  const CovariateSchema& schema) {
  auto spec = parse_accel_spec(source);
  Acceleration(spec, schema);  // validates names and kinds
  return spec;
}

Acceleration::Acceleration(AccelerationSpec spec, const CovariateSchema& schema)
    : spec_(std::move(spec)) {
  for (const auto& f : spec_.factors()) {
    if (f.form == AccelerationFactor::Form::constant) {
      index_.push_back(-1);
      continue;
    }
    auto idx = schema.find(f.covariate);
    const bool want_process = f.form == AccelerationFactor::Form::process_indicator;
    if (!idx)
      throw ParseError(std::string(want_process ? "unknown process: "
                                                : "unknown covariate: ") +
                       f.covariate);
    if (want_process != (schema[*idx].kind == CovariateKind::process))
      throw ParseError(f.covariate + (want_process ? " is not a process covariate"
                                                   : " is not a baseline covariate"));
    index_.push_back(static_cast<std::ptrdiff_t>(*idx));
  }
}

double Acceleration::rate(std::span<const double> state) const noexcept {
  double g = 1.0;
  const auto factors = spec_.factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& f = factors[k];
    if (index_[k] < 0) {
      g *= f.b;
    } else if (compare(state[static_cast<std::size_t>(index_[k])], f.op,
                       f.threshold)) {
      g *= f.b;
    }
  }
  return g;
}

bool Acceleration::depends_on(std::size_t index) const noexcept {
  for (auto i : index_)
    if (i == static_cast<std::ptrdiff_t>(index)) return true;
  return false;
}

double evaluate_g(const Acceleration& accel, const SubjectPath& subject, double t) {
  std::vector<double> state(subject.baseline().begin(), subject.baseline().end());
  for (const Event& e : subject.events()) {
    if (!(e.time < t)) break;
    if (e.type == EventType::covariate_change)
      state[static_cast<std::size_t>(e.covariate)] = e.value;
  }
  return accel.rate(state);
}

}  // namespace tamsm
