// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hcount/predictive.hpp"
#include "oracles.hpp"

using namespace hcount;

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Hand-built posterior with M identical draws for n metros and T years.
struct Fixture {
  PosteriorDraws draws;
  ModelData data;
};

Fixture fixture(int n, int T, int M, double psi, double eta, BetaParams acc, std::int64_t H = 5000) {
  Fixture f;
  auto& d = f.draws;
  d.n_metros = n;
  d.T = T;
  d.eta = Eigen::MatrixXd::Constant(M, n * T, eta);
  d.psi = Eigen::MatrixXd::Constant(M, n * T, psi);
  d.H = Eigen::MatrixXd::Constant(M, n * T, static_cast<double>(H));
  d.nu = Eigen::MatrixXd::Zero(M, n);
  d.phi = Eigen::MatrixXd::Constant(M, n, 1.0);
  d.nu_bar = Eigen::VectorXd::Zero(M);
  d.phi_bar = Eigen::VectorXd::Ones(M);
  auto& m = f.data;
  m.C = MatrixXl::Constant(n, T, H / 2);
  m.N = MatrixXl::Constant(n, T, 1000000);
  m.dzri = Eigen::MatrixXd::Zero(n, T);
  for (int i = 0; i < n; ++i) {
    MetroPrior p;
    p.eta = EtaSetup{2000000.0, 0.0, 0.0001};
    for (int t = 0; t < T; ++t) {
      AccuracyRow row;
      row.beta = acc;
      p.accuracy.years.push_back(row);
    }
    m.priors.push_back(p);
  }
  return f;
}

}  // namespace

TEST_CASE("interpolated quantiles and summaries") {
  Eigen::VectorXd v(5);
  v << 5, 1, 4, 2, 3;
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 5.0);
  CHECK(quantile(v, 0.25) == doctest::Approx(2.0));
  CHECK(quantile(v, 0.1) == doctest::Approx(1.4));
  CHECK_THROWS_AS(quantile(Eigen::VectorXd(), 0.5), std::invalid_argument);
  const auto s = summarize(v, 0.5);
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.lo == doctest::Approx(2.0));
  CHECK(s.hi == doctest::Approx(4.0));
  const auto o = summarize_one_sided(v, 0.75);
  CHECK(o.lo == 1.0);
  CHECK(o.hi == doctest::Approx(4.0));
}

TEST_CASE("perfect accuracy reproduces the total as the synthetic count") {
  auto f = fixture(2, 3, 50, -5.0, 0.0, kPerfectAccuracy);
  const auto c = synthetic_count(f.draws, f.data, 3);
  CHECK(c == f.draws.H);
}

TEST_CASE("synthetic count thins the total by the accuracy mean") {
  const auto acc = beta_params(0.75, 0.0005);
  auto f = fixture(1, 1, 20000, -5.0, 0.0, acc, 4000);
  const Eigen::VectorXd c = synthetic_count(f.draws, f.data, 4).col(0);
  // law of total variance for Binomial(H, pi) with pi ~ Beta
  const double var = 4000 * 0.75 * 0.25 + 4000.0 * 3999.0 * 0.0005;
  CHECK(std::abs(c.mean() - 3000.0) < 4.0 * std::sqrt(var / 20000.0));
  CHECK(c.maxCoeff() <= 4000.0);
  CHECK(synthetic_count(f.draws, f.data, 4) == synthetic_count(f.draws, f.data, 4));
}

TEST_CASE("imputed totals summarize each column") {
  auto f = fixture(2, 2, 4, -5.0, 0.0, kPerfectAccuracy);
  f.draws.H.col(f.draws.col(1, 1)) << 10, 20, 30, 40;
  const auto s = impute_totals(f.draws);
  CHECK(s[0][0].mean == 5000.0);
  CHECK(s[1][1].mean == doctest::Approx(25.0));
  CHECK(s[1][1].lo == doctest::Approx(10.75));
}

TEST_CASE("rent counterfactual with no increase is exactly zero") {
  auto f = fixture(2, 3, 500, -5.0, 0.0, beta_params(0.75, 0.0005));
  const auto r = zri_counterfactual(f.draws, f.data, 0.0, 2, 11);
  CHECK(r.h_increase.isZero());
  CHECK(r.c_increase.isZero());
  CHECK_THROWS_AS(zri_counterfactual(f.draws, f.data, -0.01, 2, 11), std::invalid_argument);
  CHECK_THROWS_AS(zri_counterfactual(f.draws, f.data, 0.05, 3, 11), std::invalid_argument);
}

TEST_CASE("rent counterfactual increase grows with the shift and matches its expectation") {
  auto f = fixture(1, 2, 20000, -5.0, 0.0, kPerfectAccuracy);
  const auto a = zri_counterfactual(f.draws, f.data, 0.05, 1, 12);
  const auto b = zri_counterfactual(f.draws, f.data, 0.10, 1, 12);
  const double N = 1000000.0;
  for (double x : {0.05, 0.10}) {
    const auto& r = x == 0.05 ? a : b;
    const double expect = N * (expit(-5.0 + x) - expit(-5.0));
    const double se = std::sqrt(oracle::moments(std::vector<double>(r.h_increase.data(),
                                                                    r.h_increase.data() + r.h_increase.size()))
                                    .var /
                                20000.0);
    CHECK(std::abs(r.h_increase.mean() - expect) < 4.0 * se);
  }
  CHECK(a.h_summary[0].mean < b.h_summary[0].mean);
  CHECK(a.c_increase == a.h_increase);
  CHECK(b.h_one_sided[0].lo == b.h_increase.minCoeff());
}

TEST_CASE("rate change classification") {
  auto f = fixture(3, 3, 200, -5.0, 0.0, kPerfectAccuracy);
  const double up = std::log(expit(-5.0) * 1.1 / (1.0 - expit(-5.0) * 1.1));
  const double down = std::log(expit(-5.0) * 0.9 / (1.0 - expit(-5.0) * 0.9));
  f.draws.psi.col(f.draws.col(1, 2)).setConstant(up);
  f.draws.psi.col(f.draws.col(2, 2)).setConstant(down);
  const auto rc = rate_change(f.draws, 0, 2, 0.04);
  CHECK(rc[0].summary.mean == doctest::Approx(0.0));
  CHECK(rc[0].classification == RateClass::kStatusQuo);
  CHECK(rc[1].summary.mean == doctest::Approx(0.1));
  CHECK(rc[1].classification == RateClass::kEmergency);
  CHECK(rc[2].summary.mean == doctest::Approx(-0.1));
  CHECK(rc[2].classification == RateClass::kDecreasing);
  CHECK(to_string(RateClass::kEmergency) == "emergency");
  CHECK_THROWS_AS(rate_change(f.draws, 0, 3), std::invalid_argument);
}

TEST_CASE("forecast with frozen dynamics is a Poisson count") {
  auto f = fixture(1, 2, 20000, -5.0, 0.5, kPerfectAccuracy);
  f.data.spec.sigma2_eta = 0.0;
  f.data.spec.sigma2_psi = 0.0;
  Eigen::VectorXd last(1), next(1);
  last << 1500.0;
  next << 1500.0;
  const Eigen::VectorXd h = forecast_next_year(f.draws, f.data, last, next, 13).col(0);
  // Poisson thinned by a binomial stays Poisson
  const double lambda = 2000000.0 * expit(0.5) * expit(-5.0);
  std::vector<std::int64_t> xs(h.size());
  for (Eigen::Index k = 0; k < h.size(); ++k) xs[k] = static_cast<std::int64_t>(h(k));
  CHECK_FALSE(oracle::poisson_gof(xs, lambda, 0.001).reject);

  // a rent rise moves the forecast through phi
  next << 1650.0;
  const Eigen::VectorXd up = forecast_next_year(f.draws, f.data, last, next, 13).col(0);
  CHECK(up.mean() / h.mean() == doctest::Approx(expit(-4.9) / expit(-5.0)).epsilon(0.01));

  last << 0.0;
  CHECK_THROWS_AS(forecast_next_year(f.draws, f.data, last, next, 13), std::invalid_argument);
}
