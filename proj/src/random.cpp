// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/random.hpp"

#include <boost/math/distributions/normal.hpp>

namespace hcount {

namespace {

constexpr double kRejectionCutoff = 4.0;

// Robert (1995) exponential proposal with optimal rate.
double tail_rejection(Rng& rng, double alpha) {
  const double rate = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  while (true) {
    const double z = alpha - std::log(uniform01(rng)) / rate;
    const double d = z - rate;
    if (std::log(uniform01(rng)) <= -0.5 * d * d) return z;
  }
}

}  // namespace

double truncated_normal_below(Rng& rng, double mean, double sd, double lower) {
  const double alpha = (lower - mean) / sd;
  if (alpha > kRejectionCutoff) return mean + sd * tail_rejection(rng, alpha);

  const boost::math::normal_distribution<double> unit;
  // upper-tail mass Q(alpha); drawing v ~ U(0, Q) and inverting Q keeps
  // precision when alpha is large and positive
  const double upper_mass = boost::math::cdf(boost::math::complement(unit, alpha));
  double z;
  do {
    const double v = uniform01(rng) * upper_mass;
    z = boost::math::quantile(boost::math::complement(unit, v));
  } while (!(z > alpha));
  return mean + sd * z;
}

}  // namespace hcount
