// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_POLYA_GAMMA_HPP
#define HCOUNT_POLYA_GAMMA_HPP

#include <cstdint>

#include "hcount/random.hpp"

namespace hcount {

/// Shapes above this are drawn from a moment-matched Gaussian truncated at 0.
inline constexpr std::int64_t kPgExactMaxShape = 64;

struct PgParams {
  std::int64_t b = 1;  // shape, >= 1
  double c = 0.0;      // tilt
};

/// E[PG(b, c)] = b / (2c) tanh(c / 2); b / 4 at c = 0.
double pg_mean(double b, double c);

/// Var[PG(b, c)] = b (sinh c - c) / (4 c^3 cosh^2(c / 2)); b / 24 at c = 0.
double pg_var(double b, double c);

/// Exact PG(1, c) draw (Devroye alternating-series rejection).
double sample_pg1(double c, Rng& rng);

/// PG(b, c): sum of b exact PG(1, c) draws for b <= kPgExactMaxShape,
/// otherwise Gaussian with matching mean and variance, truncated at 0.
double sample_pg(const PgParams& params, Rng& rng);

}  // namespace hcount

#endif  // HCOUNT_POLYA_GAMMA_HPP
