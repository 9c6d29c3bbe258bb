// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/priors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hcount {

void PriorSpec::validate() const {
  const std::pair<const char*, double> variances[] = {
      {"sigma2_psi", sigma2_psi},         {"sigma2_psi0", sigma2_psi0},   {"sigma2_eta", sigma2_eta},
      {"var_eta0", var_eta0},             {"var_pi", var_pi},             {"sigma2_phi_bar", sigma2_phi_bar},
      {"sigma2_phi_i", sigma2_phi_i},     {"sigma2_nu_i", sigma2_nu_i},   {"sigma2_nu_bar", sigma2_nu_bar},
  };
  for (const auto& [name, v] : variances)
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be strictly positive");
  if (!(lambda_bar_multiplier > 1.0)) throw ValidationError("lambda_bar_multiplier must exceed 1");
  if (!(accuracy_cap > 0.0 && accuracy_cap < 1.0)) throw ValidationError("accuracy_cap must lie in (0, 1)");
  if (!(unsheltered_accuracy > 0.0 && unsheltered_accuracy <= 1.0))
    throw ValidationError("unsheltered_accuracy must lie in (0, 1]");
  if (!(sheltered_accuracy > 0.0 && sheltered_accuracy <= 1.0))
    throw ValidationError("sheltered_accuracy must lie in (0, 1]");
  if (!(rate_change_bound >= 0.0)) throw ValidationError("rate_change_bound must be nonnegative");
  if (psi0_mc_draws < 1) throw ValidationError("psi0_mc_draws must be >= 1");
}

BetaParams beta_params(double mean, double variance) {
  if (!(mean > 0.0 && mean < 1.0)) throw std::invalid_argument("beta mean must lie in (0, 1)");
  if (!(variance > 0.0)) throw std::invalid_argument("beta variance must be positive");
  const double spread = mean * (1.0 - mean);
  if (!(variance < spread)) throw std::invalid_argument("beta variance must be below mean (1 - mean)");
  const double k = spread / variance - 1.0;
  return {mean * k, (1.0 - mean) * k};
}

double beta_b_alternate_form(double mean, double variance, double a) {
  return variance / (mean * mean) * (a * a / mean + a);
}

double baseline_accuracy_mean(std::int64_t sheltered, std::int64_t unsheltered, double sheltered_accuracy,
                              double unsheltered_accuracy) {
  if (sheltered < 0 || unsheltered < 0) throw std::invalid_argument("counts must be nonnegative");
  const auto total = sheltered + unsheltered;
  if (total == 0) throw std::invalid_argument("baseline accuracy needs a nonzero baseline count");
  const double t = static_cast<double>(total);
  return sheltered_accuracy * static_cast<double>(sheltered) / t +
         unsheltered_accuracy * static_cast<double>(unsheltered) / t;
}

double unsheltered_delta(double delta_bar, std::int64_t sheltered, std::int64_t total, DeltaBasis basis) {
  if (total <= 0) throw std::invalid_argument("unsheltered_delta needs a positive total count");
  const double share = static_cast<double>(sheltered) / static_cast<double>(total);
  return delta_bar * (basis == DeltaBasis::kSheltered ? share : 1.0 - share);
}

namespace {

AccuracyRow make_row(double mean, double variance, double cap, int t, std::vector<std::string>& warnings) {
  AccuracyRow row;
  row.mean = std::min(mean, cap);
  row.variance = variance;
  if (row.mean + 2.0 * std::sqrt(row.variance) >= 1.0) {
    const double sd = (1.0 - row.mean) / 3.0;
    row.variance = sd * sd;
    std::ostringstream msg;
    msg << "year index " << t << ": accuracy mean " << row.mean << " too close to 1; variance shrunk from "
        << variance << " to " << row.variance;
    warnings.push_back(msg.str());
  }
  row.beta = beta_params(row.mean, row.variance);
  return row;
}

}  // namespace

AccuracyPrior accuracy_trajectory(const AccuracyScenario& scenario, double pi0_mean, double delta, int T,
                                  double variance, double cap) {
  if (!(pi0_mean > 0.0 && pi0_mean <= 1.0)) throw std::invalid_argument("pi0_mean must lie in (0, 1]");
  if (scenario.kind == ScenarioKind::kLinear && delta < 0.0)
    throw std::invalid_argument("linear accuracy gain must be nonnegative");
  if (scenario.kind == ScenarioKind::kStep && (scenario.tau < 1 || scenario.tau > T))
    throw std::invalid_argument("step year tau must lie within the modeled years");

  AccuracyPrior prior;
  prior.baseline = make_row(pi0_mean, variance, cap, 0, prior.warnings);
  double mean = pi0_mean;
  for (int t = 1; t <= T; ++t) {
    switch (scenario.kind) {
      case ScenarioKind::kConstant:
        mean = pi0_mean;
        break;
      case ScenarioKind::kLinear:
        // first modeled year carries the baseline expectation
        if (t > 1) mean = std::min(mean + delta, 1.0);
        break;
      case ScenarioKind::kStep:
        mean = t < scenario.tau ? pi0_mean : std::min(pi0_mean + delta, 1.0);
        break;
    }
    prior.years.push_back(make_row(mean, variance, cap, t, prior.warnings));
  }
  return prior;
}

AccuracyPrior accuracy_prior_for(const MetroSeries& series, const AccuracyScenario& scenario,
                                 const PriorSpec& spec) {
  const double pi0 = baseline_accuracy_mean(series.count_sheltered, series.count_unsheltered,
                                            spec.sheltered_accuracy, spec.unsheltered_accuracy);
  double delta = 0.0;
  if (scenario.kind == ScenarioKind::kStep && !std::isnan(scenario.step_size)) {
    delta = scenario.step_size;
  } else if (scenario.kind != ScenarioKind::kConstant) {
    delta = unsheltered_delta(scenario.delta_bar, series.count_sheltered, series.count[0], spec.delta_basis);
  }
  auto prior = accuracy_trajectory(scenario, pi0, delta, series.modeled_years(), spec.var_pi, spec.accuracy_cap);
  for (auto& w : prior.warnings) w = "metro " + series.metro_id + ": " + w;
  return prior;
}

std::vector<AccuracyPrior> accuracy_priors_for(const Panel& panel, const AccuracyScenario& scenario,
                                               const PriorSpec& spec) {
  std::vector<AccuracyPrior> out;
  out.reserve(panel.metros.size());
  for (const auto& m : panel.metros) out.push_back(accuracy_prior_for(m, scenario, spec));
  return out;
}

double calibrate_phi_mean(double f0_bar, double zri_fraction, double target_ratio) {
  if (!(zri_fraction > 0.0)) throw std::invalid_argument("zri_fraction must be positive");
  if (!(target_ratio >= 1.0)) throw std::invalid_argument("target_ratio must be at least 1");
  const double numer = 1.0 + std::exp(-f0_bar);
  auto residual = [&](double m) { return numer / (1.0 + std::exp(-f0_bar - zri_fraction * m)) - target_ratio; };

  double lo = 0.0;
  double hi = 1.0;
  if (residual(lo) > 0.0) throw std::invalid_argument("calibration bracket has no sign change");
  while (residual(hi) < 0.0) {
    hi *= 2.0;
    // ratio saturates at 1 + e^{-f0}
    if (hi > 1e12) throw std::invalid_argument("calibration bracket has no sign change");
  }
  if (residual(lo) == 0.0) return lo;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::abs(r) < 1e-12 || hi - lo < 1e-15) return mid;
    (r < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mc_mean_reciprocal(const BetaParams& beta, std::int64_t draws, Rng& rng) {
  if (beta.perfect()) return 1.0;
  double sum = 0.0;
  for (std::int64_t k = 0; k < draws; ++k) sum += 1.0 / hcount::beta(rng, beta.a, beta.b);
  return sum / static_cast<double>(draws);
}

GaussianPrior psi0_prior(std::int64_t c0, std::int64_t n0, const AccuracyRow& baseline, std::int64_t mc_draws,
                         Rng& rng, double variance) {
  if (n0 <= 0) throw std::invalid_argument("baseline population must be positive");
  const double inflation = mc_mean_reciprocal(baseline.beta, mc_draws, rng);
  const double share = inflation * static_cast<double>(c0) / static_cast<double>(n0);
  if (!(share < 1.0)) throw std::invalid_argument("inflated baseline count is not below the population");
  if (!(share > 0.0)) throw std::invalid_argument("baseline count must be positive");
  return {logit(share), variance};
}

EtaSetup eta0_lambda_setup(std::int64_t n0, const PriorSpec& spec) {
  if (n0 <= 0) throw std::invalid_argument("baseline population must be positive");
  return {spec.lambda_bar_multiplier * static_cast<double>(n0), spec.mean_eta0, spec.var_eta0};
}

std::vector<MetroPrior> elicit_priors(const Panel& panel, const AccuracyScenario& scenario, const PriorSpec& spec) {
  spec.validate();
  std::vector<MetroPrior> out;
  out.reserve(panel.metros.size());
  for (std::size_t i = 0; i < panel.metros.size(); ++i) {
    const auto& m = panel.metros[i];
    MetroPrior mp;
    mp.accuracy = accuracy_prior_for(m, scenario, spec);
    Rng rng = make_stream(spec.psi0_mc_seed, 0, i, Stream::kPrior, 0);
    mp.psi0 = psi0_prior(m.count[0], m.population[0], mp.accuracy.baseline, spec.psi0_mc_draws, rng,
                         spec.sigma2_psi0);
    mp.eta = eta0_lambda_setup(m.population[0], spec);
    out.push_back(std::move(mp));
  }
  return out;
}

}  // namespace hcount
