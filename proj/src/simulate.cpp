// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace hcount {

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double lchoose(double n, double k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

SimulatedPanel generate_panel(const PriorSpec& prior, const SimulationSpec& sim, Rng& rng) {
  prior.validate();
  if (sim.n_metros < 1 || sim.T < 1) throw std::invalid_argument("simulation needs at least one metro and year");
  const int n = sim.n_metros;
  const int T = sim.T;
  const double sd_eta = std::sqrt(sim.sigma2_eta.value_or(prior.sigma2_eta));
  const double sd_psi = std::sqrt(sim.sigma2_psi.value_or(prior.sigma2_psi));

  GroundTruth g;
  g.phi_bar = sim.phi_bar ? *sim.phi_bar
                          : truncated_normal_below(rng, prior.m_phi_bar, std::sqrt(prior.sigma2_phi_bar), 0.0);
  g.nu_bar = sim.nu_bar ? *sim.nu_bar : normal(rng, 0.0, std::sqrt(prior.sigma2_nu_bar));
  g.phi.resize(n);
  g.nu.resize(n);
  g.lambda_bar.resize(n);
  g.eta.resize(n, T + 1);
  g.psi.resize(n, T + 1);
  g.H.resize(n, T + 1);
  g.pi.resize(n, T + 1);
  g.below_rate_floor.assign(n, false);

  SimulatedPanel out;
  for (int i = 0; i < n; ++i) {
    g.phi(i) = sim.phi ? sim.phi->at(i)
                       : truncated_normal_below(rng, g.phi_bar, std::sqrt(prior.sigma2_phi_i), 0.0);
    g.nu(i) = sim.nu ? sim.nu->at(i) : normal(rng, g.nu_bar, std::sqrt(prior.sigma2_nu_i));

    MetroSeries s;
    s.metro_id = "metro_" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1);
    s.first_year = sim.first_year;

    const double scale = uniform(rng, sim.population_lo, sim.population_hi);
    g.lambda_bar(i) = prior.lambda_bar_multiplier * scale;
    const double share = uniform(rng, sim.sheltered_share_lo, sim.sheltered_share_hi);
    const double pi0 = share * prior.sheltered_accuracy + (1.0 - share) * prior.unsheltered_accuracy;
    double delta = 0.0;
    if (sim.scenario.kind == ScenarioKind::kStep && !std::isnan(sim.scenario.step_size)) {
      delta = sim.scenario.step_size;
    } else if (sim.scenario.kind != ScenarioKind::kConstant) {
      delta = sim.scenario.delta_bar * (prior.delta_basis == DeltaBasis::kSheltered ? share : 1.0 - share);
    }
    const AccuracyPrior acc = accuracy_trajectory(sim.scenario, pi0, delta, T, prior.var_pi, prior.accuracy_cap);

    double zri = uniform(rng, sim.zri_lo, sim.zri_hi);
    double eta = normal(rng, prior.mean_eta0, std::sqrt(prior.var_eta0));
    double psi = logit(uniform(rng, sim.rate_lo, sim.rate_hi));
    for (int t = 0; t <= T; ++t) {
      if (t > 0) {
        const double dz = sim.fixed_dzri ? *sim.fixed_dzri : uniform(rng, sim.dzri_lo, sim.dzri_hi);
        zri *= 1.0 + dz;
        eta += g.nu(i) + sd_eta * std_normal(rng);
        psi += g.phi(i) * dz + sd_psi * std_normal(rng);
      }
      const auto N = poisson(rng, g.lambda_bar(i) * logistic(eta));
      const double p = logistic(psi);
      if (p < sim.rate_floor) g.below_rate_floor[i] = true;
      const auto H = binomial(rng, N, p);
      const auto& row = t == 0 ? acc.baseline : acc.years[t - 1];
      const double pi = beta(rng, row.beta.a, row.beta.b);
      const auto C = binomial(rng, H, pi);
      g.eta(i, t) = eta;
      g.psi(i, t) = psi;
      g.H(i, t) = static_cast<double>(H);
      g.pi(i, t) = pi;
      s.count.push_back(C);
      s.population.push_back(N);
      s.zri.push_back(zri);
    }
    s.count_sheltered = std::llround(share * static_cast<double>(s.count[0]));
    s.count_unsheltered = s.count[0] - s.count_sheltered;
    out.panel.metros.push_back(std::move(s));
  }
  out.truth = std::move(g);
  out.panel.validate();
  return out;
}

double log_betabinomial_pmf(std::int64_t C, std::int64_t H, double a, double b) {
  if (C < 0 || C > H) return -INFINITY;
  const double c = static_cast<double>(C);
  const double h = static_cast<double>(H);
  if (b == 0.0) return C == H ? 0.0 : -INFINITY;
  return lchoose(h, c) + lbeta(c + a, h - c + b) - lbeta(a, b);
}

double betabinomial_pmf(std::int64_t C, std::int64_t H, double a, double b) {
  return std::exp(log_betabinomial_pmf(C, H, a, b));
}

Eigen::VectorXd brute_force_H_pmf(std::int64_t N, std::int64_t C, double p, double a, double b) {
  if (C > N || C < 0) throw std::invalid_argument("brute_force_H_pmf: need 0 <= C <= N");
  const Eigen::Index K = N - C + 1;
  Eigen::VectorXd logw(K);
  const double n = static_cast<double>(N);
  for (Eigen::Index k = 0; k < K; ++k) {
    const std::int64_t H = C + k;
    const double h = static_cast<double>(H);
    const double log_binom = lchoose(n, h) + h * std::log(p) + (n - h) * std::log1p(-p);
    logw(k) = log_betabinomial_pmf(C, H, a, b) + log_binom;
  }
  const double mx = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - mx).exp();
  return w / w.sum();
}

}  // namespace hcount
