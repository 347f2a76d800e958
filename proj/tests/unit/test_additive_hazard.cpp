#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tamsm/additive_hazard.hpp"
#include "tamsm/error.hpp"
#include "tamsm/simulation.hpp"

using namespace tamsm;
using namespace tamsm::testing;

namespace {

// A treated at 1, B treated at 2, C censored at 3; x = 0, 1, 1.
Cohort three() {
  return Cohort({subject("A", {0.0}, {treat(1.0), censor(3.0)}),
                 subject("B", {1.0}, {treat(2.0), censor(3.0)}),
                 subject("C", {1.0}, {censor(3.0)})},
                3.0, schema_x());
}

}  // namespace

TEST_CASE("intercept-only increment is the Nelson-Aalen increment") {
  Cohort c({subject("A", {0.0}, {treat(1.0)}), subject("B", {0.0}, {censor(2.0)}),
            subject("C", {0.0}, {censor(2.0)})},
           2.0, schema_x());
  auto fit = fit_aalen(c, DesignSpec::parse("1"));
  REQUIRE(fit.size() == 1);
  CHECK(fit.increment(0)[0] == doctest::Approx(1.0 / 3.0));
  CHECK(fit.at_risk[0] == 3);
}

TEST_CASE("two-subject exact fit") {
  Cohort c({subject("A", {0.0}, {censor(2.0)}), subject("B", {1.0}, {treat(1.0)})}, 2.0,
           schema_x());
  const BoundDesign design(DesignSpec::parse("1, x"), c.schema());
  auto fit = fit_aalen(c, design);
  REQUIRE(fit.size() == 1);
  CHECK(fit.rank_skipped[0] == 0);
  CHECK(fit.increment(0)[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.increment(0)[1] == doctest::Approx(1.0));
  CHECK(predict_cum_intensity(fit, c[0], design).path.final_value() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(predict_cum_intensity(fit, c[1], design).path.final_value() == doctest::Approx(1.0));

  auto resid = martingale_residuals(c, fit, design, 1);
  CHECK(std::abs(resid[1].final_value()) < 1e-12);
}

TEST_CASE("collinear rows are skipped and flagged") {
  Cohort c({subject("A", {1.0}, {censor(2.0)}), subject("B", {1.0}, {treat(1.0)})}, 2.0,
           schema_x());
  auto fit = fit_aalen(c, DesignSpec::parse("1, x"));
  REQUIRE(fit.size() == 1);
  CHECK(fit.rank_skipped[0] == 1);
  CHECK(fit.increment(0)[0] == 0.0);
  CHECK(fit.increment(0)[1] == 0.0);
}

TEST_CASE("fit errors") {
  Cohort none({subject("A", {0.0}, {censor(1.0)})}, 1.0, schema_x());
  CHECK_THROWS_WITH_AS(fit_aalen(none, DesignSpec::parse("1")),
                       doctest::Contains("no treatment events"), ModelError);
  CHECK_THROWS_WITH_AS(fit_aalen(three(), DesignSpec::parse("1, y")),
                       doctest::Contains("unknown covariate: y"), ParseError);
}

TEST_CASE("predicted cumulative intensity") {
  const auto c = three();
  const BoundDesign intercept(DesignSpec::parse("1"), c.schema());
  auto fit = fit_aalen(c, intercept);
  auto path = predict_cum_intensity(fit, c[2], intercept).path;
  CHECK(path.at(1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(path.at(2.0) == doctest::Approx(5.0 / 6.0));
  // A leaves the treatment risk set at 1.
  CHECK(predict_cum_intensity(fit, c[0], intercept).path.final_value() ==
        doctest::Approx(1.0 / 3.0));

  auto late = subject("D", {0.0}, {censor(0.5)});
  CHECK(predict_cum_intensity(fit, late, intercept).path.final_value() == 0.0);

  const BoundDesign two(DesignSpec::parse("1, x"), c.schema());
  CHECK_THROWS_WITH_AS(predict_cum_intensity(fit, c[0], two),
                       doctest::Contains("design mismatch"), ModelError);
}

TEST_CASE("negative predicted increments are kept and counted") {
  CumulativeCoefficients coeffs;
  coeffs.terms = {"1", "x"};
  coeffs.times = {1.0};
  coeffs.increments = {0.2, -0.3};
  coeffs.rank_skipped = {0};
  coeffs.at_risk = {1};
  const BoundDesign design(DesignSpec::parse("1, x"), schema_x());
  auto p = predict_cum_intensity(coeffs, subject("A", {1.0}, {censor(2.0)}), design);
  CHECK(p.path.final_value() == doctest::Approx(-0.1));
  CHECK(p.negative_increments == 1);
}

TEST_CASE("residuals and stratified means on the hand example") {
  const auto c = three();
  const BoundDesign intercept(DesignSpec::parse("1"), c.schema());
  auto fit = fit_aalen(c, intercept);
  auto resid = martingale_residuals(c, fit, intercept, 1);
  CHECK(resid[0].final_value() == doctest::Approx(2.0 / 3.0));
  CHECK(resid[1].final_value() == doctest::Approx(1.0 / 6.0));
  CHECK(resid[2].final_value() == doctest::Approx(-5.0 / 6.0));

  std::vector<double> grid{1.0, 2.0};
  auto means = residual_group_means(c, resid, CovariateExpr::parse("I(x>0)"), grid);
  REQUIRE(means.rows.size() == 4);
  CHECK(means.rows[0].stratum == 0.0);
  CHECK(means.rows[0].mean == doctest::Approx(2.0 / 3.0));
  CHECK(means.rows[1].mean == doctest::Approx(-1.0 / 3.0));
  CHECK(means.rows[3].mean == doctest::Approx(-1.0 / 3.0));
  CHECK(means.empty_strata.empty());

  auto all = residual_group_means(c, resid, CovariateExpr::intercept(), grid);
  for (const auto& row : all.rows) CHECK(std::abs(row.mean) < 1e-12);

  auto none = residual_group_means(c, resid, CovariateExpr::parse("I(x>5)"), grid);
  REQUIRE(none.empty_strata.size() == 1);
  CHECK(none.empty_strata[0] == 1.0);

  Cohort empty({}, 1.0, schema_x());
  CHECK(residual_group_means(empty, {}, CovariateExpr::intercept(), grid).rows.empty());
}

TEST_CASE("subject never at risk has a zero residual") {
  Cohort c({subject("A", {0.0}, {treat(1.0)}), subject("B", {0.0}, {censor(0.5)}),
            subject("C", {1.0}, {censor(2.0)})},
           2.0, schema_x());
  const BoundDesign d(DesignSpec::parse("1"), c.schema());
  auto resid = martingale_residuals(c, fit_aalen(c, d), d, 1);
  CHECK(resid[1].final_value() == 0.0);
  CHECK(resid[1].empty());
}

TEST_CASE("property: intercept-only fit equals the treatment Nelson-Aalen oracle") {
  const auto cohort = simulate_cohort(DgpConfig{}, 400, 21, 1);
  auto fit = fit_aalen(cohort, DesignSpec::parse("1"));
  auto oracle = treatment_nelson_aalen(cohort);
  REQUIRE(fit.size() == oracle.size());
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    CHECK(fit.times[k] == oracle[k].first);
    CHECK(std::abs(fit.increment(k)[0] - oracle[k].second) < 1e-12);
  }
}

TEST_CASE("property: residual increments are orthogonal to the design") {
  const auto cohort = simulate_cohort(DgpConfig{}, 600, 4, 1);
  const BoundDesign design(DgpConfig::treatment_design(), cohort.schema());
  auto fit = fit_aalen(cohort, design);
  auto resid = martingale_residuals(cohort, fit, design, 1);
  for (std::size_t k = 0; k < fit.size(); ++k) {
    if (fit.rank_skipped[k]) continue;
    const double t = fit.times[k];
    std::vector<double> sum(design.size(), 0.0);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (!at_risk(cohort[i], RiskTarget::treatment, t)) continue;
      const double dm = resid[i].at(t) - resid[i].left_limit(t);
      const auto row = covariate_row(cohort[i], design, t);
      for (std::size_t j = 0; j < row.size(); ++j) sum[j] += row[j] * dm;
    }
    for (double s : sum) CHECK(std::abs(s) < 1e-10);
  }
}
