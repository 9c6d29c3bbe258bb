// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_RANDOM_HPP
#define HCOUNT_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace hcount {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sampler steps used as part of an rng stream key.
enum class Stream : std::uint64_t {
  kZ = 1,
  kEta = 2,
  kOmega = 3,
  kNu = 4,
  kNuBar = 5,
  kPsi = 6,
  kZeta = 7,
  kPhi = 8,
  kPhiBar = 9,
  kH = 10,
  kPredictive = 11,
  kSimulate = 12,
  kPrior = 13,
};

/// Deterministic stream keyed by (seed, chain, unit, step, sweep). Results do
/// not depend on the order in which streams are created or consumed.
inline Rng make_stream(std::uint64_t seed, std::uint64_t chain,
                       std::uint64_t unit, Stream step, std::uint64_t sweep) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ chain);
  h = mix64(h ^ unit);
  h = mix64(h ^ static_cast<std::uint64_t>(step));
  h = mix64(h ^ sweep);
  return Rng(h);
}

inline double uniform01(Rng& rng) {
  // (0, 1): never returns exactly 0 so log(u) is finite
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double normal(Rng& rng, double mean, double sd) {
  return mean + sd * std_normal(rng);
}

inline double gamma(Rng& rng, double shape) {
  return std::gamma_distribution<double>(shape, 1.0)(rng);
}

inline double beta(Rng& rng, double a, double b) {
  const double x = gamma(rng, a);
  const double y = gamma(rng, b);
  return x / (x + y);
}

inline std::int64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

inline std::int64_t binomial(Rng& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// N(mean, sd^2) restricted to (lower, inf). Inverse CDF on the upper tail
/// mass when the bound is within 4 sd of the mean; one-sided exponential
/// rejection otherwise.
double truncated_normal_below(Rng& rng, double mean, double sd, double lower);

}  // namespace hcount

#endif  // HCOUNT_RANDOM_HPP
