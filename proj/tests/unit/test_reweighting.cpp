#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "tamsm/error.hpp"
#include "tamsm/estimators.hpp"
#include "tamsm/reweighting.hpp"
#include "tamsm/simulation.hpp"

using namespace tamsm;
using namespace tamsm::testing;

namespace {

const CovariateSchema& schema() {
  static const CovariateSchema s = schema_x();
  return s;
}

}  // namespace

TEST_CASE("hand example: own treatment at the second step") {
  Acceleration g2(AccelerationSpec::constant(2), schema());
  auto s = subject("A", {0.0}, {treat(2.0), censor(5.0)});
  StepFunction lambda(0.0, {1.0, 2.0}, {0.1, 0.3});
  auto r = likelihood_ratio_path(s, lambda, g2);
  CHECK(r.path.initial() == 1.0);
  CHECK(r.path.at(1.0) == doctest::Approx(0.9));
  CHECK(r.path.at(2.0) == doctest::Approx(1.62));
  CHECK(r.path.at(4.0) == doctest::Approx(1.62));
  CHECK(r.floor_hits == 0);
}

TEST_CASE("hand example: never treated") {
  Acceleration g2(AccelerationSpec::constant(2), schema());
  auto s = subject("B", {0.0}, {censor(5.0)});
  StepFunction lambda(0.0, {1.0, 2.0, 3.0}, {0.1, 0.2, 0.3});
  auto r = likelihood_ratio_path(s, lambda, g2);
  CHECK(r.path.final_value() == doctest::Approx(0.729));
}

TEST_CASE("identity acceleration leaves weights exactly one") {
  Acceleration g1(AccelerationSpec::constant(1), schema());
  auto s = subject("A", {0.0}, {treat(2.0)});
  StepFunction lambda(0.0, {1.0, 2.0}, {0.7, 3.1});
  auto r = likelihood_ratio_path(s, lambda, g1);
  for (double v : r.path.values()) CHECK(v == 1.0);
}

TEST_CASE("weights below the floor are truncated and counted") {
  Acceleration g3(AccelerationSpec::constant(3), schema());
  auto s = subject("A", {0.0}, {censor(5.0)});
  StepFunction lambda(0.0, {1.0}, {0.6});  // factor 1 - 2*0.6 < 0
  auto r = likelihood_ratio_path(s, lambda, g3, 1e-6);
  CHECK(r.floor_hits == 1);
  CHECK(r.path.at(1.0) == 1e-6);
  for (double v : r.path.values()) CHECK(v >= 1e-6);
  // Once floored, any further shrinking step is floored (and counted) again.
  StepFunction two(0.0, {1.0, 2.0}, {0.6, 0.7});
  CHECK(likelihood_ratio_path(s, two, g3, 1e-6).floor_hits == 2);
  CHECK_THROWS_AS(likelihood_ratio_path(s, lambda, g3, 0.0), ModelError);
}

TEST_CASE("weight diagnostics") {
  std::vector<LikelihoodRatioPath> ones(3);
  auto d = weight_diagnostics(ones, 2.0);
  CHECK(d.mean == 1.0);
  CHECK(d.max == 1.0);
  CHECK(d.min == 1.0);
  CHECK(d.floor_hit_count == 0);

  Acceleration g2(AccelerationSpec::constant(2), schema());
  std::vector<LikelihoodRatioPath> hand{
      likelihood_ratio_path(subject("A", {0.0}, {treat(2.0)}),
                            StepFunction(0.0, {1.0, 2.0}, {0.1, 0.3}), g2),
      likelihood_ratio_path(subject("B", {0.0}, {censor(5.0)}),
                            StepFunction(0.0, {1.0, 2.0, 3.0}, {0.1, 0.2, 0.3}), g2)};
  d = weight_diagnostics(hand, 5.0);
  CHECK(d.mean == doctest::Approx(1.1745));
  CHECK(d.max == doctest::Approx(1.62));
  CHECK(d.min == doctest::Approx(0.729));

  CHECK_THROWS_AS(weight_diagnostics(std::vector<LikelihoodRatioPath>{}, 1.0), ModelError);
}

TEST_CASE("property: weights change only at pooled treatment times and stop after treatment") {
  const auto cohort = simulate_cohort(DgpConfig{}, 300, 12, 1);
  auto result = run_pipeline(cohort, DgpConfig::treatment_design(),
                             AccelerationSpec::constant(2), {kDefaultWeightFloor, 1});
  const auto& pooled = result.coefficients.times;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& path = result.weights[i].path;
    CHECK(path.initial() == 1.0);
    for (double t : path.times()) {
      CHECK(std::binary_search(pooled.begin(), pooled.end(), t));
      CHECK(t <= risk_end(cohort[i], RiskTarget::treatment));
    }
    for (double v : path.values()) CHECK(v >= kDefaultWeightFloor);
  }
}

TEST_CASE("property: identity acceleration gives bitwise unit weights on any fit") {
  const auto cohort = simulate_cohort(DgpConfig{}, 200, 13, 1);
  auto result = run_pipeline(cohort, DesignSpec::parse("1, phys"), AccelerationSpec{},
                             {kDefaultWeightFloor, 1});
  for (const auto& w : result.weights)
    for (double v : w.path.values()) CHECK(v == 1.0);
}
