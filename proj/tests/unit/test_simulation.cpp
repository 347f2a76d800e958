#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "tamsm/error.hpp"
#include "tamsm/simulation.hpp"

using namespace tamsm;
using namespace tamsm::testing;

namespace {

double treated_fraction(const Cohort& c) {
  return static_cast<double>(summarize(c).treated) / static_cast<double>(c.size());
}

// Treatment at a constant rate, nothing competes, follow-up 10 years.
DgpConfig pure_treatment(double rate) {
  DgpConfig cfg;
  cfg.entry_span = 0.0;
  cfg.treat_intercept = rate;
  cfg.treat_severe = cfg.treat_diabetes = cfg.treat_phys = cfg.treat_dialysis2yr = 0.0;
  cfg.outcome_intercept = cfg.outcome_severe = cfg.outcome_diabetes = 0.0;
  cfg.outcome_phys = cfg.outcome_dialysis2yr = cfg.outcome_treated = 0.0;
  return cfg;
}

double median_treatment_time(const Cohort& c) {
  std::vector<double> t;
  for (const auto& s : c.subjects()) t.push_back(s.treatment_time());  // +inf if untreated
  std::nth_element(t.begin(), t.begin() + static_cast<long>(t.size() / 2), t.end());
  return t[t.size() / 2];
}

}  // namespace

TEST_CASE("default config is valid and round-trips through its text form") {
  DgpConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto again = parse_dgp_config(write_dgp_config(cfg));
  CHECK(write_dgp_config(again) == write_dgp_config(cfg));
  CHECK(parse_dgp_config("p_severe=0.2\n").p_severe == 0.2);
  CHECK_THROWS_WITH_AS(parse_dgp_config("colour=1"), doctest::Contains("unknown DGP key"),
                       ParseError);
}

TEST_CASE("invalid configs are rejected") {
  DgpConfig cfg;
  cfg.p_severe = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ParseError);
  cfg = DgpConfig{};
  cfg.disease_probs = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), ParseError);
  cfg = DgpConfig{};
  cfg.treat_intercept = 0.0;
  CHECK_THROWS_WITH_AS(simulate_cohort(cfg, 10, 1), doctest::Contains("negative treatment"),
                       ParseError);
  cfg = DgpConfig{};
  cfg.outcome_intercept = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("negative outcome"), ParseError);
}

TEST_CASE("simulation is deterministic in the seed, not the thread count") {
  const DgpConfig cfg;
  const auto a = simulate_cohort(cfg, 500, 77, 1);
  const auto b = simulate_cohort(cfg, 500, 77, 4);
  CHECK(a == b);
  CHECK_FALSE(a == simulate_cohort(cfg, 500, 78, 1));
}

TEST_CASE("identity acceleration reproduces the observational world bitwise") {
  const DgpConfig cfg;
  CHECK(simulate_hypothetical(cfg, AccelerationSpec{}, 400, 5, 2) ==
        simulate_cohort(cfg, 400, 5, 2));
  CHECK(simulate_hypothetical(cfg, AccelerationSpec::constant(1), 400, 5, 2) ==
        simulate_cohort(cfg, 400, 5, 2));
}

TEST_CASE("default cohort matches the registry's marginal shape") {
  const auto c = simulate_cohort(DgpConfig{}, 10000, 2024);
  CHECK(treated_fraction(c) == doctest::Approx(0.733).epsilon(0.03 / 0.733));
  std::size_t severe = 0;
  for (const auto& s : c.subjects()) severe += s.baseline()[0] > 6.0 ? 1 : 0;
  CHECK(static_cast<double>(severe) / 10000.0 == doctest::Approx(0.112).epsilon(0.02 / 0.112));
  const auto summary = summarize(c);
  CHECK(summary.outcome_labels.size() == 2);
  CHECK(summary.no_terminal == 0);
}

TEST_CASE("doubling the treatment rate raises the treated fraction") {
  const std::size_t n = 10000;
  const double p0 = treated_fraction(simulate_cohort(DgpConfig{}, n, 41));
  const double p1 =
      treated_fraction(simulate_hypothetical(DgpConfig{}, AccelerationSpec::constant(2), n, 42));
  const double pooled = 0.5 * (p0 + p1);
  const double z = (p1 - p0) / std::sqrt(pooled * (1 - pooled) * 2.0 / static_cast<double>(n));
  CHECK(z > 2.326);  // one-sided p < 0.01
}

TEST_CASE("constant acceleration divides the median waiting time by b") {
  const auto cfg = pure_treatment(0.4);
  const std::size_t n = 20000;
  const double m_obs = median_treatment_time(simulate_cohort(cfg, n, 1));
  for (double b : {0.5, 2.0}) {
    const double m_hyp =
        median_treatment_time(simulate_hypothetical(cfg, AccelerationSpec::constant(b), n, 2));
    // The sample median of an exponential has sd median/(log 2 sqrt(n)).
    const double sd = (m_obs / b) / std::log(2.0) * std::sqrt(2.0 / static_cast<double>(n));
    const double tol = 4.0 * sd;
    CHECK(std::abs(m_hyp - m_obs / b) < tol);
    CHECK(std::abs(m_obs - std::log(2.0) / 0.4) <
          4.0 * m_obs / std::log(2.0) / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("oracle survival examples") {
  std::vector<double> grid{0.5, 1.0, 2.0};
  Cohort alive({subject("A", {0}, {censor(3.0)}), subject("B", {0}, {censor(2.0)})}, 3.0,
               schema_x());
  for (double s : oracle_survival(alive, grid).estimate) CHECK(s == 1.0);

  Cohort one({subject("A", {0}, {outcome(1.0)})}, 3.0, schema_x());
  auto c = oracle_survival(one, grid);
  CHECK(c.estimate == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(oracle_survival(one, std::vector<double>{0.999}).estimate[0] == 1.0);

  auto cfg = pure_treatment(0.0001);
  cfg.treat_intercept = 0.0;
  cfg.outcome_intercept = 0.2;
  auto big = simulate_cohort(cfg, 200000, 3);
  CHECK(summarize(big).treated == 0);
  auto s5 = oracle_survival(big, std::vector<double>{5.0}).estimate[0];
  CHECK(s5 == doctest::Approx(std::exp(-1.0)).epsilon(0.01 / std::exp(-1.0)));
}

TEST_CASE("oracle survival agrees with the independent Kaplan-Meier") {
  const auto c = simulate_cohort(DgpConfig{}, 2000, 9);
  std::vector<double> grid;
  for (double t = 0.25; t <= 10.0; t += 0.25) grid.push_back(t);
  const auto km = kaplan_meier(c);
  const auto curve = oracle_survival(c, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(std::abs(curve.estimate[k] - kaplan_meier_at(km, grid[k])) < 1e-12);
}

TEST_CASE("simulated paths respect the waiting-list mechanics") {
  const auto c = simulate_cohort(DgpConfig{}, 1000, 10);
  const auto dialysis = c.schema().index_of("dialysis2yr");
  for (const auto& s : c.subjects()) {
    CHECK(s.terminal() != Terminal::none);
    for (const auto& e : s.events()) {
      if (e.type == EventType::covariate_change && e.covariate == static_cast<int>(dialysis)) {
        CHECK(e.value == 1.0);
        CHECK(e.time < s.treatment_time());  // the dialysis clock stops at the graft
      }
    }
  }
}
