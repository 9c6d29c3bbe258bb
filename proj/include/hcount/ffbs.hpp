// Apache License, Version 2.0, refer to LICENSE.txt

// Forward filtering / backward sampling for the scalar random walk
//
//   x_t = x_{t-1} + d_t + w_t,   w_t ~ N(0, sigma2),   x_0 ~ N(m0, S0)
//
// observed through Polya-Gamma augmented pseudo-observations: each t
// contributes exp(kappa_t x_t - omega_t x_t^2 / 2), i.e. a Gaussian with
// precision omega_t and mean kappa_t / omega_t.

#ifndef HCOUNT_FFBS_HPP
#define HCOUNT_FFBS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "hcount/random.hpp"

namespace hcount {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct FfbsProblem {
  Scalar m0 = 0;
  Scalar S0 = 1;
  Vec<Scalar> omega;  // precisions, t = 1..T
  Vec<Scalar> kappa;  // pseudo-observations
  Vec<Scalar> drift;  // d_t
  Scalar sigma2 = 1;  // innovation variance

  Eigen::Index T() const { return omega.size(); }
};

template <typename Scalar>
struct Filtered {
  Vec<Scalar> m;
  Vec<Scalar> S;
};

template <typename Scalar>
void check_problem(const FfbsProblem<Scalar>& p) {
  if (p.kappa.size() != p.T() || p.drift.size() != p.T())
    throw std::invalid_argument("ffbs: omega, kappa and drift must have equal length");
  if (!(p.S0 > 0) || !(p.sigma2 >= 0)) throw std::invalid_argument("ffbs: S0 must be > 0 and sigma2 >= 0");
  if ((p.omega.array() < 0).any()) throw std::invalid_argument("ffbs: precisions must be nonnegative");
}

/// S_t = (omega_t + 1 / (S_{t-1} + sigma2))^{-1}
/// m_t = S_t (kappa_t + (m_{t-1} + d_t) / (S_{t-1} + sigma2))
/// The innovation variance enters both recursions.
template <typename Scalar>
Filtered<Scalar> filter_forward(const FfbsProblem<Scalar>& p) {
  check_problem(p);
  const Eigen::Index T = p.T();
  Filtered<Scalar> f{Vec<Scalar>(T), Vec<Scalar>(T)};
  Scalar m_prev = p.m0;
  Scalar S_prev = p.S0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const Scalar R = S_prev + p.sigma2;
    const Scalar S = Scalar(1) / (p.omega(t) + Scalar(1) / R);
    const Scalar m = S * (p.kappa(t) + (m_prev + p.drift(t)) / R);
    if (!std::isfinite(static_cast<double>(m)) || !std::isfinite(static_cast<double>(S)) || !(S > 0))
      throw std::runtime_error("ffbs: nonfinite filtered moment at t = " + std::to_string(t + 1));
    f.m(t) = m;
    f.S(t) = S;
    m_prev = m;
    S_prev = S;
  }
  return f;
}

/// Draws x_T ~ N(m_T, S_T), then x_t | x_{t+1} ~ N(m~_t, S~_t) backwards with
/// S~_t = (1/S_t + 1/sigma2)^{-1}, m~_t = S~_t (m_t/S_t + (x_{t+1} - d_{t+1})/sigma2).
template <typename Scalar>
Vec<Scalar> sample_backward(const FfbsProblem<Scalar>& p, const Filtered<Scalar>& f, Rng& rng) {
  const Eigen::Index T = p.T();
  Vec<Scalar> x(T);
  if (T == 0) return x;
  x(T - 1) = normal(rng, f.m(T - 1), std::sqrt(f.S(T - 1)));
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const Scalar target = x(t + 1) - p.drift(t + 1);
    if (p.sigma2 == 0) {
      x(t) = target;
      continue;
    }
    const Scalar S = Scalar(1) / (Scalar(1) / f.S(t) + Scalar(1) / p.sigma2);
    const Scalar m = S * (f.m(t) / f.S(t) + target / p.sigma2);
    x(t) = normal(rng, m, std::sqrt(S));
  }
  return x;
}

template <typename Scalar>
Vec<Scalar> ffbs(const FfbsProblem<Scalar>& p, Rng& rng) {
  return sample_backward(p, filter_forward(p), rng);
}

}  // namespace hcount

#endif  // HCOUNT_FFBS_HPP
