// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "hcount/priors.hpp"

using namespace hcount;

namespace {

double logit_ref(double p) { return std::log(p / (1.0 - p)); }

MetroSeries metro(std::int64_t sheltered, std::int64_t unsheltered, int T) {
  MetroSeries m;
  m.metro_id = "m";
  m.first_year = 2010;
  m.count_sheltered = sheltered;
  m.count_unsheltered = unsheltered;
  for (int t = 0; t <= T; ++t) {
    m.count.push_back(sheltered + unsheltered);
    m.population.push_back(1000000);
    m.zri.push_back(1500.0);
  }
  return m;
}

}  // namespace

TEST_CASE("baseline accuracy mean weights the two counts") {
  CHECK(baseline_accuracy_mean(100, 0) == doctest::Approx(1.0));
  CHECK(baseline_accuracy_mean(0, 100) == doctest::Approx(0.6));
  CHECK(baseline_accuracy_mean(50, 50) == doctest::Approx(0.8));
  CHECK(baseline_accuracy_mean(30, 10, 0.9, 0.5) == doctest::Approx(0.8));
  CHECK_THROWS_AS(baseline_accuracy_mean(0, 0), std::invalid_argument);
}

TEST_CASE("moment-matched beta parameters") {
  const auto b = beta_params(0.75, 0.0005);
  CHECK(b.a == doctest::Approx(280.5).epsilon(1e-12));
  CHECK(b.b == doctest::Approx(93.5).epsilon(1e-12));
  CHECK(b.mean() == doctest::Approx(0.75));
  CHECK(b.variance() == doctest::Approx(0.0005));
  CHECK(beta_b_alternate_form(0.75, 0.0005, b.a) == doctest::Approx(b.b).epsilon(1e-12));
  for (double m : {0.2, 0.6, 0.93}) {
    const auto p = beta_params(m, 0.001);
    CHECK(beta_b_alternate_form(m, 0.001, p.a) == doctest::Approx(p.b).epsilon(1e-10));
  }
  CHECK_THROWS_AS(beta_params(1.0, 0.0005), std::invalid_argument);
  CHECK_THROWS_AS(beta_params(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_params(0.5, 0.25), std::invalid_argument);
  CHECK(kPerfectAccuracy.perfect());
  CHECK(kPerfectAccuracy.mean_reciprocal() == 1.0);
}

TEST_CASE("constant trajectory repeats the baseline") {
  const auto p = accuracy_trajectory({ScenarioKind::kConstant}, 0.8, 0.3, 4, 0.0005);
  REQUIRE(p.years.size() == 4);
  for (const auto& r : p.years) {
    CHECK(r.mean == doctest::Approx(0.8));
    CHECK(r.variance == doctest::Approx(0.0005));
  }
  CHECK(p.warnings.empty());
}

TEST_CASE("linear trajectory is capped and shrinks the variance near one") {
  const auto p = accuracy_trajectory({ScenarioKind::kLinear}, 0.95, 0.1, 3, 0.0005);
  REQUIRE(p.years.size() == 3);
  CHECK(p.years[0].mean == doctest::Approx(0.95));
  CHECK(p.years[0].variance == doctest::Approx(0.0005));
  CHECK(p.years[1].mean == doctest::Approx(0.999));
  CHECK(p.years[2].mean == doctest::Approx(0.999));
  const double sd = 0.001 / 3.0;
  CHECK(p.years[1].variance == doctest::Approx(sd * sd));
  CHECK(p.years[1].mean + 2.0 * std::sqrt(p.years[1].variance) < 1.0);
  CHECK(p.warnings.size() == 2);
  CHECK_THROWS_AS(accuracy_trajectory({ScenarioKind::kLinear}, 0.8, -0.01, 3, 0.0005), std::invalid_argument);
}

TEST_CASE("step trajectory jumps at tau") {
  AccuracyScenario s{ScenarioKind::kStep, 0.0, 3};
  const auto p = accuracy_trajectory(s, 0.7, 0.1, 6, 0.0005);
  const double expect[] = {0.7, 0.7, 0.8, 0.8, 0.8, 0.8};
  REQUIRE(p.years.size() == 6);
  for (int t = 0; t < 6; ++t) CHECK(p.years[t].mean == doctest::Approx(expect[t]));
  s.tau = 7;
  CHECK_THROWS_AS(accuracy_trajectory(s, 0.7, 0.1, 6, 0.0005), std::invalid_argument);
  s.tau = 0;
  CHECK_THROWS_AS(accuracy_trajectory(s, 0.7, 0.1, 6, 0.0005), std::invalid_argument);
}

TEST_CASE("unsheltered gain scales by the chosen share") {
  CHECK(unsheltered_delta(0.02, 25, 100, DeltaBasis::kSheltered) == doctest::Approx(0.005));
  CHECK(unsheltered_delta(0.02, 25, 100, DeltaBasis::kUnsheltered) == doctest::Approx(0.015));
  CHECK_THROWS_AS(unsheltered_delta(0.02, 0, 0), std::invalid_argument);
}

TEST_CASE("per-metro prior wires baseline, gain and tau") {
  PriorSpec spec;
  AccuracyScenario s{ScenarioKind::kLinear, 0.04};
  const auto p = accuracy_prior_for(metro(60, 40, 3), s, spec);
  // baseline 0.6 + 0.4 * 0.6 = 0.84, gain 0.04 * 0.6 = 0.024
  CHECK(p.baseline.mean == doctest::Approx(0.84));
  CHECK(p.years[0].mean == doctest::Approx(0.84));
  CHECK(p.years[1].mean == doctest::Approx(0.864));
  CHECK(p.years[2].mean == doctest::Approx(0.888));

  AccuracyScenario step{ScenarioKind::kStep, 0.0, 2, 0.05};
  const auto q = accuracy_prior_for(metro(60, 40, 3), step, spec);
  CHECK(q.years[0].mean == doctest::Approx(0.84));
  CHECK(q.years[1].mean == doctest::Approx(0.89));
}

TEST_CASE("rent-effect mean calibration") {
  CHECK(calibrate_phi_mean(-5.5, 0.1, 1.0) == 0.0);
  // closed-form inverse of the ratio equation
  auto inverse = [](double f0, double x, double r) {
    return (-f0 - std::log((1.0 + std::exp(-f0)) / r - 1.0)) / x;
  };
  const double x = 100.0 / 1534.0;
  for (double r : {1.01, 1.0634, 1.2}) {
    CHECK(calibrate_phi_mean(-5.5, x, r) == doctest::Approx(inverse(-5.5, x, r)).epsilon(1e-9));
  }
  const double m = calibrate_phi_mean(-5.5, x, 1.0634);
  const double back = (1.0 + std::exp(5.5)) / (1.0 + std::exp(5.5 - x * m));
  CHECK(std::abs(back - 1.0634) < 1e-9);
  CHECK(calibrate_phi_mean(-5.5, x, 1.05) < calibrate_phi_mean(-5.5, x, 1.06));
  CHECK_THROWS_AS(calibrate_phi_mean(-5.5, x, 0.99), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_phi_mean(-5.5, 0.0, 1.05), std::invalid_argument);
  // ratio can never exceed 1 + e^{-f0}
  CHECK_THROWS_AS(calibrate_phi_mean(2.0, x, 2.0), std::invalid_argument);
}

TEST_CASE("baseline log-odds prior inflates the count by E[1/pi]") {
  AccuracyRow row;
  row.mean = 0.75;
  row.variance = 0.0005;
  row.beta = beta_params(0.75, 0.0005);
  const double inv = 373.0 / 279.5;
  CHECK(row.beta.mean_reciprocal() == doctest::Approx(inv).epsilon(1e-12));

  Rng rng = make_stream(5, 0, 0, Stream::kPrior, 0);
  const auto g = psi0_prior(10000, 2000000, row, 100000, rng, 0.01);
  CHECK(g.mean == doctest::Approx(logit_ref(inv * 0.005)).epsilon(2e-4));
  CHECK(g.mean == doctest::Approx(-5.003).epsilon(1e-3));
  CHECK(g.variance == 0.01);
  // Jensen: inflation exceeds 1 / E[pi]
  CHECK(g.mean > logit_ref(0.005 / 0.75));

  Rng rng2(1);
  const AccuracyRow perfect;
  CHECK(psi0_prior(10000, 2000000, perfect, 10, rng2).mean == doctest::Approx(logit_ref(0.005)));
  CHECK_THROWS_AS(psi0_prior(10000, 0, row, 10, rng2), std::invalid_argument);
  CHECK_THROWS_AS(psi0_prior(0, 1000, row, 10, rng2), std::invalid_argument);
  CHECK_THROWS_AS(psi0_prior(1000, 1000, row, 10, rng2), std::invalid_argument);
}

TEST_CASE("Monte Carlo reciprocal mean converges") {
  Rng rng = make_stream(6, 0, 0, Stream::kPrior, 0);
  const auto b = beta_params(0.6, 0.001);
  CHECK(mc_mean_reciprocal(b, 200000, rng) == doctest::Approx(b.mean_reciprocal()).epsilon(1e-3));
}

TEST_CASE("population intensity setup") {
  const auto e = eta0_lambda_setup(2000000);
  CHECK(e.lambda_bar == doctest::Approx(4000000.0));
  CHECK(e.mean_eta0 == 0.0);
  CHECK(e.var_eta0 == doctest::Approx(0.0001));
  CHECK_THROWS_AS(eta0_lambda_setup(0), std::invalid_argument);
}

TEST_CASE("invalid hyperparameters are rejected") {
  PriorSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.sigma2_eta = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.lambda_bar_multiplier = 1.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.accuracy_cap = 1.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}
