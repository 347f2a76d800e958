#include "tamsm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>

#include "tamsm/error.hpp"
#include "tamsm/parallel.hpp"
#include "tamsm/random.hpp"
#include "tamsm/text_io.hpp"

namespace tamsm {

namespace {

enum Column : std::size_t { kLci = 0, kDisease = 1, kPhys = 2, kDialysis = 3 };

struct Field {
  std::string_view name;
  double DgpConfig::*member;
};

constexpr std::array<Field, 24> kFields{{
    {"horizon", &DgpConfig::horizon},
    {"entry_span", &DgpConfig::entry_span},
    {"p_severe", &DgpConfig::p_severe},
    {"p_dialysis_at_entry", &DgpConfig::p_dialysis_at_entry},
    {"dialysis_prior_max", &DgpConfig::dialysis_prior_max},
    {"dialysis_start_rate", &DgpConfig::dialysis_start_rate},
    {"phys_mean", &DgpConfig::phys_mean},
    {"phys_sd", &DgpConfig::phys_sd},
    {"phys_interval", &DgpConfig::phys_interval},
    {"phys_drift", &DgpConfig::phys_drift},
    {"phys_noise_sd", &DgpConfig::phys_noise_sd},
    {"treat_intercept", &DgpConfig::treat_intercept},
    {"treat_severe", &DgpConfig::treat_severe},
    {"treat_diabetes", &DgpConfig::treat_diabetes},
    {"treat_phys", &DgpConfig::treat_phys},
    {"treat_dialysis2yr", &DgpConfig::treat_dialysis2yr},
    {"outcome_intercept", &DgpConfig::outcome_intercept},
    {"outcome_severe", &DgpConfig::outcome_severe},
    {"outcome_diabetes", &DgpConfig::outcome_diabetes},
    {"outcome_phys", &DgpConfig::outcome_phys},
    {"outcome_dialysis2yr", &DgpConfig::outcome_dialysis2yr},
    {"outcome_treated", &DgpConfig::outcome_treated},
    {"withdrawal_fraction", &DgpConfig::withdrawal_fraction},
    {"disease_probs", nullptr},
}};

constexpr double kPhysMin = 0.0;
constexpr double kPhysMax = 100.0;

// Self-reported scores are recorded on a 5-point scale.
double report_phys(double x) {
  return std::clamp(5.0 * std::round(x / 5.0), kPhysMin, kPhysMax);
}

double treatment_rate(const DgpConfig& c, std::span<const double> s) {
  return c.treat_intercept + c.treat_severe * (s[kLci] > 6.0 ? 1.0 : 0.0) +
         c.treat_diabetes * (s[kDisease] == 0.0 ? 1.0 : 0.0) +
         c.treat_phys * s[kPhys] +
         c.treat_dialysis2yr * (s[kDialysis] != 0.0 ? 1.0 : 0.0);
}

double outcome_rate(const DgpConfig& c, std::span<const double> s, bool treated) {
  return c.outcome_intercept + c.outcome_severe * (s[kLci] > 6.0 ? 1.0 : 0.0) +
         c.outcome_diabetes * (s[kDisease] == 0.0 ? 1.0 : 0.0) +
         c.outcome_phys * s[kPhys] +
         c.outcome_dialysis2yr * (s[kDialysis] != 0.0 && !treated ? 1.0 : 0.0) +
         c.outcome_treated * (treated ? 1.0 : 0.0);
}

SubjectPath simulate_subject(const DgpConfig& cfg, const Acceleration* accel,
                             std::uint64_t seed, std::size_t index) {
  Rng rng(seed);

  // Baseline draws, in a fixed order.
  const bool severe = rng.bernoulli(cfg.p_severe);
  const double lci = severe ? 7.0 + static_cast<double>(rng.below(4))
                            : 2.0 + static_cast<double>(rng.below(5));
  const double u_disease = rng.uniform();
  double disease = 2.0;
  if (u_disease < cfg.disease_probs[0]) {
    disease = 0.0;
  } else if (u_disease < cfg.disease_probs[0] + cfg.disease_probs[1]) {
    disease = 1.0;
  }
  const double phys0 = report_phys(cfg.phys_mean + cfg.phys_sd * rng.normal());
  const bool on_dialysis = rng.bernoulli(cfg.p_dialysis_at_entry);
  const double u_dialysis = rng.uniform();
  double crossing = on_dialysis ? 2.0 - u_dialysis * cfg.dialysis_prior_max
                                : -std::log1p(-u_dialysis) / cfg.dialysis_start_rate + 2.0;
  const double entry = rng.uniform() * cfg.entry_span;
  const double follow_up = cfg.horizon - entry;
  double budget_treatment = rng.exponential();
  double budget_outcome = rng.exponential();
  const bool withdrawal = rng.bernoulli(cfg.withdrawal_fraction);

  std::vector<double> state{lci, disease, phys0, 0.0};
  if (crossing <= 0.0) {
    state[kDialysis] = 1.0;
    crossing = kInfinity;
  }
  std::vector<double> baseline = state;
  std::vector<Event> events;

  bool treated = false;
  double t = 0.0;
  std::size_t phys_reports = 1;
  double next_phys = cfg.phys_interval;
  for (;;) {
    const double next_change = std::min({next_phys, crossing, follow_up});
    double rate_a = 0.0;
    if (!treated) {
      rate_a = treatment_rate(cfg, state);
      if (accel) rate_a *= accel->rate(state);
    }
    const double rate_d = outcome_rate(cfg, state, treated);
    const double t_a = rate_a > 0.0 ? t + budget_treatment / rate_a : kInfinity;
    const double t_d = rate_d > 0.0 ? t + budget_outcome / rate_d : kInfinity;

    if (t_a < t_d && t_a < next_change) {
      budget_outcome = std::max(0.0, budget_outcome - rate_d * (t_a - t));
      budget_treatment = 0.0;
      t = t_a;
      treated = true;
      events.push_back({t, EventType::treatment, -1, 0.0});
      continue;
    }
    if (t_d < next_change) {
      events.push_back({t_d, EventType::outcome, -1, 0.0});
      return SubjectPath(std::to_string(index + 1), std::move(baseline),
                         std::move(events), withdrawal ? "withdrawal" : "death");
    }
    budget_treatment = std::max(0.0, budget_treatment - rate_a * (next_change - t));
    budget_outcome = std::max(0.0, budget_outcome - rate_d * (next_change - t));
    t = next_change;
    if (t == follow_up) {
      events.push_back({t, EventType::censor, -1, 0.0});
      return SubjectPath(std::to_string(index + 1), std::move(baseline),
                         std::move(events));
    }
    if (t == crossing) {
      crossing = kInfinity;
      if (!treated) {
        state[kDialysis] = 1.0;
        events.push_back({t, EventType::covariate_change, kDialysis, 1.0});
      }
    }
    if (t == next_phys) {
      state[kPhys] =
          report_phys(state[kPhys] - cfg.phys_drift + cfg.phys_noise_sd * rng.normal());
      events.push_back({t, EventType::covariate_change, kPhys, state[kPhys]});
      next_phys = cfg.phys_interval * static_cast<double>(++phys_reports);
    }
  }
}

Cohort simulate(const DgpConfig& cfg, const Acceleration* accel, std::size_t n,
                std::uint64_t seed, unsigned threads) {
  cfg.validate();
  std::vector<SubjectPath> subjects(n);
  parallel_for(n, threads, [&](std::size_t i) {
    subjects[i] = simulate_subject(cfg, accel, derive_seed(seed, 0x51b, i), i);
  });
  return Cohort(std::move(subjects), cfg.horizon, DgpConfig::schema());
}

}  // namespace

void DgpConfig::validate() const {
  auto probability = [](double p, std::string_view name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ParseError("probability out of [0,1]: " + std::string(name));
  };
  probability(p_severe, "p_severe");
  probability(p_dialysis_at_entry, "p_dialysis_at_entry");
  probability(withdrawal_fraction, "withdrawal_fraction");
  double total = 0.0;
  for (double p : disease_probs) {
    probability(p, "disease_probs");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParseError("disease_probs must sum to 1");
  if (!(horizon > 0.0)) throw ParseError("horizon must be positive");
  if (!(entry_span >= 0.0 && entry_span < horizon))
    throw ParseError("entry_span must lie in [0, horizon)");
  if (!(phys_interval > 0.0)) throw ParseError("phys_interval must be positive");
  if (!(dialysis_start_rate > 0.0) || !(dialysis_prior_max >= 0.0))
    throw ParseError("dialysis parameters out of range");
  if (!(phys_sd >= 0.0) || !(phys_noise_sd >= 0.0))
    throw ParseError("standard deviations must be nonnegative");

  // Both intensities are linear in phys, so checking the phys bounds for
  // every indicator combination covers every reachable state.
  for (int severe = 0; severe <= 1; ++severe)
    for (int diabetes = 0; diabetes <= 1; ++diabetes)
      for (double phys : {kPhysMin, kPhysMax})
        for (int dialysis = 0; dialysis <= 1; ++dialysis) {
          const std::array<double, 4> s{severe ? 7.0 : 2.0, diabetes ? 0.0 : 1.0,
                                        phys, static_cast<double>(dialysis)};
          if (treatment_rate(*this, s) < 0.0)
            throw ParseError("negative treatment intensity for a reachable state");
          for (bool treated : {false, true})
            if (outcome_rate(*this, s, treated) < 0.0)
              throw ParseError("negative outcome intensity for a reachable state");
        }
}

DesignSpec DgpConfig::treatment_design() {
  return DesignSpec::parse("1, I(x_lci>6), I(disease==0), phys, I(dialysis2yr!=0)");
}

CovariateSchema DgpConfig::schema() {
  return CovariateSchema({{"x_lci", CovariateKind::baseline},
                          {"disease", CovariateKind::baseline},
                          {"phys", CovariateKind::process},
                          {"dialysis2yr", CovariateKind::process}});
}

DgpConfig parse_dgp_config(std::string_view source) {
  DgpConfig cfg;
  for (const auto& line : io::content_lines(source)) {
    auto eq = line.text.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected key=value", {}, line.number);
    auto key = io::trim(line.text.substr(0, eq));
    auto value = io::trim(line.text.substr(eq + 1));
    auto field = std::find_if(kFields.begin(), kFields.end(),
                              [&](const Field& f) { return f.name == key; });
    if (field == kFields.end())
      throw ParseError("unknown DGP key '" + std::string(key) + "'", {}, line.number);
    if (field->member == nullptr) {
      auto parts = io::split(value, ',');
      if (parts.size() != 3)
        throw ParseError("disease_probs needs three values", {}, line.number);
      for (std::size_t k = 0; k < 3; ++k) {
        auto v = io::parse_double(parts[k]);
        if (!v) throw ParseError("non-numeric disease_probs", {}, line.number);
        cfg.disease_probs[k] = *v;
      }
      continue;
    }
    auto v = io::parse_double(value);
    if (!v)
      throw ParseError("non-numeric value for " + std::string(key), {}, line.number);
    cfg.*(field->member) = *v;
  }
  cfg.validate();
  return cfg;
}

std::string write_dgp_config(const DgpConfig& cfg) {
  std::string out;
  for (const auto& f : kFields) {
    out += f.name;
    out += '=';
    if (f.member == nullptr) {
      out += io::format_exact(cfg.disease_probs[0]) + "," +
             io::format_exact(cfg.disease_probs[1]) + "," +
             io::format_exact(cfg.disease_probs[2]);
    } else {
      out += io::format_exact(cfg.*(f.member));
    }
    out += '\n';
  }
  return out;
}

Cohort simulate_cohort(const DgpConfig& cfg, std::size_t n, std::uint64_t seed,
                       unsigned threads) {
  return simulate(cfg, nullptr, n, seed, threads);
}

Cohort simulate_hypothetical(const DgpConfig& cfg, const AccelerationSpec& accel,
                             std::size_t n, std::uint64_t seed, unsigned threads) {
  const Acceleration bound(accel, DgpConfig::schema());
  return simulate(cfg, &bound, n, seed, threads);
}

SurvivalCurve oracle_survival(const Cohort& cohort, std::span<const double> grid) {
  // Kaplan–Meier over the sorted exit times; ties of outcomes and censorings
  // at one time count the censored as still at risk.
  std::vector<std::pair<double, bool>> exits;
  exits.reserve(cohort.size());
  for (const auto& s : cohort.subjects())
    exits.emplace_back(std::min(s.exit_time(), cohort.horizon()), s.had_outcome());
  std::sort(exits.begin(), exits.end());

  std::vector<double> times{0.0};
  std::vector<double> surv{1.0};
  double at_risk = static_cast<double>(exits.size());
  double s = 1.0;
  for (std::size_t k = 0; k < exits.size();) {
    const double t = exits[k].first;
    double deaths = 0.0, leaving = 0.0;
    for (; k < exits.size() && exits[k].first == t; ++k) {
      deaths += exits[k].second ? 1.0 : 0.0;
      leaving += 1.0;
    }
    if (deaths > 0.0) {
      s *= (at_risk - deaths) / at_risk;
      times.push_back(t);
      surv.push_back(s);
    }
    at_risk -= leaving;
  }
  SurvivalCurve full;
  full.grid = std::move(times);
  full.estimate = std::move(surv);
  full.scenario = "oracle";
  return full.on_grid(grid);
}

}  // namespace tamsm
