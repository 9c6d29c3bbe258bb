// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/polya_gamma.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hcount {

namespace {

using std::numbers::pi;

// Switch point between the left (inverse Gaussian) and right (exponential)
// envelope pieces.
constexpr double kTrunc = 0.64;

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_exponential(Rng& rng) { return -std::log(uniform01(rng)); }

// Coefficient a_n(x) of the alternating series for the J*(1, z) density.
double a_coef(int n, double x) {
  const double k = n + 0.5;
  if (x <= kTrunc) {
    return pi * k * std::pow(2.0 / (pi * x), 1.5) * std::exp(-2.0 * k * k / x);
  }
  return pi * k * std::exp(-0.5 * k * k * pi * pi * x);
}

// Inverse Gaussian IG(mu, 1) restricted to (0, kTrunc); z = 1 / mu.
double truncated_inv_gauss(double z, Rng& rng) {
  const double mu = z > 0.0 ? 1.0 / z : INFINITY;
  double x;
  if (mu > kTrunc) {
    while (true) {
      double e1, e2;
      do {
        e1 = std_exponential(rng);
        e2 = std_exponential(rng);
      } while (e1 * e1 > 2.0 * e2 / kTrunc);
      x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
      if (uniform01(rng) <= std::exp(-0.5 * z * z * x)) return x;
    }
  }
  do {
    const double n = std_normal(rng);
    const double y = n * n;
    x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + (mu * y) * (mu * y));
    if (uniform01(rng) > mu / (mu + x)) x = mu * mu / x;
  } while (x > kTrunc);
  return x;
}

}  // namespace

double pg_mean(double b, double c) {
  const double x = std::abs(c);
  if (x < 1e-6) return 0.25 * b;
  return 0.5 * b * std::tanh(0.5 * x) / x;
}

double pg_var(double b, double c) {
  const double x = std::abs(c);
  if (x < 1e-3) {
    // (sinh x - x) / x^3 and cosh^2(x/2) by Taylor expansion
    const double x2 = x * x;
    const double ratio = 1.0 / 6.0 + x2 / 120.0 + x2 * x2 / 5040.0;
    const double ch = std::cosh(0.5 * x);
    return 0.25 * b * ratio / (ch * ch);
  }
  // (sinh x - x) / cosh^2(x/2) = 2 (tanh(x/2) - x / (1 + cosh x)); no overflow
  return 0.5 * b * (std::tanh(0.5 * x) - x / (1.0 + std::cosh(x))) / (x * x * x);
}

double sample_pg1(double c, Rng& rng) {
  const double z = 0.5 * std::abs(c);
  const double k = 0.125 * pi * pi + 0.5 * z * z;
  // Mixture weights of the two envelope pieces.
  const double p = 0.5 * pi / k * std::exp(-k * kTrunc);
  const double s = std::sqrt(1.0 / kTrunc);
  const double q = 2.0 * (std::exp(-z) * phi_cdf(s * (kTrunc * z - 1.0)) +
                          std::exp(z) * phi_cdf(-s * (kTrunc * z + 1.0)));
  const double left_weight = p / (p + q);

  while (true) {
    double x;
    if (uniform01(rng) < left_weight) x = kTrunc + std_exponential(rng) / k;
    else x = truncated_inv_gauss(z, rng);

    double sum = a_coef(0, x);
    const double y = uniform01(rng) * sum;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        sum -= a_coef(n, x);
        if (y <= sum) return 0.25 * x;
      } else {
        sum += a_coef(n, x);
        if (y > sum) break;
      }
    }
  }
}

double sample_pg(const PgParams& params, Rng& rng) {
  if (params.b < 1) throw std::invalid_argument("PG shape must be >= 1");
  if (params.b <= kPgExactMaxShape) {
    double total = 0.0;
    for (std::int64_t j = 0; j < params.b; ++j) total += sample_pg1(params.c, rng);
    return total;
  }
  const double b = static_cast<double>(params.b);
  return truncated_normal_below(rng, pg_mean(b, params.c), std::sqrt(pg_var(b, params.c)), 0.0);
}

}  // namespace hcount
