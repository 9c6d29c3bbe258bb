// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hcount {

double quantile(Eigen::VectorXd values, double q) {
  const Eigen::Index n = values.size();
  if (n == 0) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.data(), values.data() + n);
  const double pos = q * static_cast<double>(n - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return values(lo) + frac * (values(hi) - values(lo));
}

Summary summarize(const Eigen::Ref<const Eigen::VectorXd>& draws, double level) {
  const double tail = 0.5 * (1.0 - level);
  return {draws.mean(), quantile(draws, tail), quantile(draws, 1.0 - tail)};
}

Summary summarize_one_sided(const Eigen::Ref<const Eigen::VectorXd>& draws, double level) {
  return {draws.mean(), draws.minCoeff(), quantile(draws, level)};
}

Eigen::MatrixXd synthetic_count(const PosteriorDraws& draws, const ModelData& data, std::uint64_t seed) {
  const Eigen::Index M = draws.n_draws();
  Eigen::MatrixXd out(M, draws.H.cols());
  for (int i = 0; i < draws.n_metros; ++i) {
    for (int t = 0; t < draws.T; ++t) {
      const auto col = draws.col(i, t);
      const auto& acc = data.accuracy(i, t);
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(col), 0, Stream::kPredictive, 1);
      for (Eigen::Index m = 0; m < M; ++m) {
        const auto h = static_cast<std::int64_t>(draws.H(m, col));
        const double pi = acc.perfect() ? 1.0 : beta(rng, acc.a, acc.b);
        out(m, col) = static_cast<double>(binomial(rng, h, pi));
      }
    }
  }
  return out;
}

std::vector<std::vector<Summary>> impute_totals(const PosteriorDraws& draws, double level) {
  std::vector<std::vector<Summary>> out(draws.n_metros, std::vector<Summary>(draws.T));
  for (int i = 0; i < draws.n_metros; ++i)
    for (int t = 0; t < draws.T; ++t) out[i][t] = summarize(draws.H.col(draws.col(i, t)), level);
  return out;
}

CounterfactualResult zri_counterfactual(const PosteriorDraws& draws, const ModelData& data, double x, int year,
                                        std::uint64_t seed) {
  if (!(x >= 0.0)) throw std::invalid_argument("counterfactual ZRI increase must be nonnegative");
  if (year < 0 || year >= draws.T) throw std::invalid_argument("counterfactual year out of range");
  const Eigen::Index M = draws.n_draws();
  const int n = draws.n_metros;
  CounterfactualResult r;
  r.x = x;
  r.year = year;
  r.h_increase.resize(M, n);
  r.c_increase.resize(M, n);
  for (int i = 0; i < n; ++i) {
    const auto col = draws.col(i, year);
    const std::int64_t N = data.N(i, year);
    const auto& acc = data.accuracy(i, year);
    for (Eigen::Index m = 0; m < M; ++m) {
      // x is deliberately not part of the key: every x shares the stream
      const Rng base = make_stream(seed, static_cast<std::uint64_t>(m), i, Stream::kPredictive,
                                   static_cast<std::uint64_t>(year));
      const double psi = draws.psi(m, col);
      Rng rng0 = base;
      Rng rngx = base;
      const std::int64_t h0 = binomial(rng0, N, logistic(psi));
      const std::int64_t hx = binomial(rngx, N, logistic(psi + draws.phi(m, i) * x));

      Rng pi_rng = make_stream(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(m), i, Stream::kPredictive,
                               static_cast<std::uint64_t>(year));
      const double pi = acc.perfect() ? 1.0 : beta(pi_rng, acc.a, acc.b);
      Rng thin0 = pi_rng;
      Rng thinx = pi_rng;
      const std::int64_t c0 = binomial(thin0, h0, pi);
      const std::int64_t cx = binomial(thinx, hx, pi);
      r.h_increase(m, i) = static_cast<double>(hx - h0);
      r.c_increase(m, i) = static_cast<double>(cx - c0);
    }
    r.h_summary.push_back(summarize(r.h_increase.col(i)));
    r.c_summary.push_back(summarize(r.c_increase.col(i)));
    r.h_one_sided.push_back(summarize_one_sided(r.h_increase.col(i)));
    r.c_one_sided.push_back(summarize_one_sided(r.c_increase.col(i)));
  }
  return r;
}

std::string to_string(RateClass c) {
  switch (c) {
    case RateClass::kEmergency: return "emergency";
    case RateClass::kDecreasing: return "decreasing";
    case RateClass::kStatusQuo: return "status_quo";
  }
  return "status_quo";
}

std::vector<RateChange> rate_change(const PosteriorDraws& draws, int t_from, int t_to, double bound) {
  if (t_from < 0 || t_from >= draws.T || t_to < 0 || t_to >= draws.T)
    throw std::invalid_argument("rate_change years out of range");
  std::vector<RateChange> out(draws.n_metros);
  for (int i = 0; i < draws.n_metros; ++i) {
    const Eigen::VectorXd from = draws.psi.col(draws.col(i, t_from));
    const Eigen::VectorXd to = draws.psi.col(draws.col(i, t_to));
    auto& rc = out[i];
    rc.draws = to.binaryExpr(from, [](double b, double a) {
      const double pa = logistic(a);
      return (logistic(b) - pa) / pa;
    });
    rc.summary = summarize(rc.draws);
    if (rc.summary.lo > bound) rc.classification = RateClass::kEmergency;
    else if (rc.summary.hi < -bound) rc.classification = RateClass::kDecreasing;
    else rc.classification = RateClass::kStatusQuo;
  }
  return out;
}

Eigen::MatrixXd forecast_next_year(const PosteriorDraws& draws, const ModelData& data,
                                   const Eigen::Ref<const Eigen::VectorXd>& zri_last,
                                   const Eigen::Ref<const Eigen::VectorXd>& zri_next, std::uint64_t seed) {
  const int n = draws.n_metros;
  if (zri_last.size() != n || zri_next.size() != n)
    throw std::invalid_argument("forecast needs one ZRI value per metro");
  const Eigen::Index M = draws.n_draws();
  const int last = draws.T - 1;
  const double sd_eta = std::sqrt(data.spec.sigma2_eta);
  const double sd_psi = std::sqrt(data.spec.sigma2_psi);
  Eigen::MatrixXd out(M, n);
  for (int i = 0; i < n; ++i) {
    if (!(zri_last(i) > 0.0)) throw std::invalid_argument("forecast needs positive ZRI");
    const double dz = (zri_next(i) - zri_last(i)) / zri_last(i);
    const double lambda_bar = data.priors[i].eta.lambda_bar;
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i), 0, Stream::kPredictive, 2);
    for (Eigen::Index m = 0; m < M; ++m) {
      const double eta = draws.eta(m, draws.col(i, last)) + draws.nu(m, i) + normal(rng, 0.0, sd_eta);
      const std::int64_t N = poisson(rng, lambda_bar * logistic(eta));
      const double psi = draws.psi(m, draws.col(i, last)) + draws.phi(m, i) * dz + normal(rng, 0.0, sd_psi);
      out(m, i) = static_cast<double>(binomial(rng, N, logistic(psi)));
    }
  }
  return out;
}

}  // namespace hcount
