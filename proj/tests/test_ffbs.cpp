// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "hcount/ffbs.hpp"
#include "oracles.hpp"

using namespace hcount;

namespace {

FfbsProblem<double> problem(int T) {
  FfbsProblem<double> p;
  p.m0 = 0.3;
  p.S0 = 0.5;
  p.sigma2 = 0.2;
  p.omega = Eigen::VectorXd(T);
  p.kappa = Eigen::VectorXd(T);
  p.drift = Eigen::VectorXd(T);
  for (int t = 0; t < T; ++t) {
    p.omega(t) = 0.8 + 0.3 * t;
    p.kappa(t) = -0.4 + 0.5 * t;
    p.drift(t) = 0.1 * (t % 2 == 0 ? 1 : -1);
  }
  return p;
}

}  // namespace

TEST_CASE("no observations propagate the prior") {
  auto p = problem(4);
  p.omega.setZero();
  p.kappa.setZero();
  const auto f = filter_forward(p);
  double m = p.m0;
  for (int t = 0; t < 4; ++t) {
    m += p.drift(t);
    CHECK(f.m(t) == doctest::Approx(m).epsilon(1e-14));
    CHECK(f.S(t) == doctest::Approx(p.S0 + p.sigma2 * (t + 1)).epsilon(1e-14));
  }
}

TEST_CASE("single period is the conjugate normal update") {
  auto p = problem(1);
  const auto f = filter_forward(p);
  const double prior_var = p.S0 + p.sigma2;
  const double prior_mean = p.m0 + p.drift(0);
  const double post_var = 1.0 / (p.omega(0) + 1.0 / prior_var);
  CHECK(f.S(0) == doctest::Approx(post_var).epsilon(1e-14));
  CHECK(f.m(0) == doctest::Approx(post_var * (p.kappa(0) + prior_mean / prior_var)).epsilon(1e-14));
}

TEST_CASE("last filtered moments equal the dense smoothing marginal") {
  for (int T : {2, 3, 6}) {
    const auto p = problem(T);
    const auto f = filter_forward(p);
    const auto dense = oracle::dense_ffbs(p);
    CHECK(f.m(T - 1) == doctest::Approx(dense.mean(T - 1)).epsilon(1e-10));
    CHECK(f.S(T - 1) == doctest::Approx(dense.cov(T - 1, T - 1)).epsilon(1e-10));
  }
}

TEST_CASE("backward draws match the dense joint posterior") {
  const int T = 3;
  const auto p = problem(T);
  const auto dense = oracle::dense_ffbs(p);
  Rng rng = make_stream(21, 0, 0, Stream::kEta, 0);
  const int n = 200000;
  Eigen::MatrixXd xs(n, T);
  for (int k = 0; k < n; ++k) xs.row(k) = ffbs(p, rng).transpose();
  const Eigen::RowVectorXd mean = xs.colwise().mean();
  const Eigen::MatrixXd centred = xs.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * centred / (n - 1.0);
  for (int t = 0; t < T; ++t) {
    const double se = std::sqrt(dense.cov(t, t) / n);
    CHECK(std::abs(mean(t) - dense.mean(t)) < 4.0 * se);
    for (int s = 0; s < T; ++s) {
      // se of a sample covariance under normality
      const double se_cov = std::sqrt((dense.cov(t, t) * dense.cov(s, s) + dense.cov(t, s) * dense.cov(t, s)) / n);
      CHECK(std::abs(cov(t, s) - dense.cov(t, s)) < 4.0 * se_cov);
    }
  }
}

TEST_CASE("zero innovation variance gives a deterministic path") {
  auto p = problem(5);
  p.sigma2 = 0.0;
  Rng rng(3);
  const auto x = ffbs(p, rng);
  for (int t = 0; t + 1 < 5; ++t) CHECK(x(t + 1) - x(t) == doctest::Approx(p.drift(t + 1)).epsilon(1e-12));
}

TEST_CASE("same stream gives the same path") {
  const auto p = problem(6);
  Rng a = make_stream(9, 1, 2, Stream::kPsi, 3);
  Rng b = make_stream(9, 1, 2, Stream::kPsi, 3);
  CHECK(ffbs(p, a) == ffbs(p, b));
}

TEST_CASE("single precision agrees with double precision") {
  const auto p = problem(4);
  FfbsProblem<float> q;
  q.m0 = static_cast<float>(p.m0);
  q.S0 = static_cast<float>(p.S0);
  q.sigma2 = static_cast<float>(p.sigma2);
  q.omega = p.omega.cast<float>();
  q.kappa = p.kappa.cast<float>();
  q.drift = p.drift.cast<float>();
  const auto fd = filter_forward(p);
  const auto ff = filter_forward(q);
  for (int t = 0; t < 4; ++t) {
    CHECK(ff.m(t) == doctest::Approx(fd.m(t)).epsilon(1e-5));
    CHECK(ff.S(t) == doctest::Approx(fd.S(t)).epsilon(1e-5));
  }
}

TEST_CASE("malformed problems are rejected") {
  auto p = problem(3);
  p.kappa = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(filter_forward(p), std::invalid_argument);
  p = problem(3);
  p.omega(1) = -1.0;
  CHECK_THROWS_AS(filter_forward(p), std::invalid_argument);
  p = problem(3);
  p.S0 = 0.0;
  CHECK_THROWS_AS(filter_forward(p), std::invalid_argument);
  p = problem(3);
  p.kappa(2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(filter_forward(p), std::runtime_error);
}
