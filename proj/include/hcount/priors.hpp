// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_PRIORS_HPP
#define HCOUNT_PRIORS_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hcount/data_model.hpp"
#include "hcount/random.hpp"

namespace hcount {

struct BetaParams {
  double a = 1.0;
  double b = 1.0;

  /// b == 0 encodes accuracy degenerate at 1 (every homeless person counted).
  bool perfect() const { return b == 0.0; }
  double mean() const { return perfect() ? 1.0 : a / (a + b); }
  double variance() const {
    if (perfect()) return 0.0;
    const double s = a + b;
    return a * b / (s * s * (s + 1.0));
  }
  /// E[1 / pi], finite for a > 1.
  double mean_reciprocal() const {
    if (perfect()) return 1.0;
    return a > 1.0 ? (a + b - 1.0) / (a - 1.0) : std::numeric_limits<double>::infinity();
  }
};

inline constexpr BetaParams kPerfectAccuracy{1.0, 0.0};

/// Moment-matched Beta(a, b). Requires 0 < mean < 1 and
/// 0 < variance < mean (1 - mean); throws std::invalid_argument otherwise.
BetaParams beta_params(double mean, double variance);

/// The b parameter in the alternate form (v / m^2)(a^2 / m + a). Kept only
/// to certify that it agrees with the closed form used by beta_params.
double beta_b_alternate_form(double mean, double variance, double a);

enum class DeltaBasis { kSheltered, kUnsheltered };
enum class ScenarioKind { kConstant, kLinear, kStep };

struct AccuracyScenario {
  ScenarioKind kind = ScenarioKind::kConstant;
  double delta_bar = 0.0;  // annual unsheltered-accuracy gain (linear) or step size source
  int tau = 1;             // first modeled year (1-based) of the step
  /// Step size in accuracy units. When unset, derived from delta_bar like the
  /// linear gain.
  double step_size = std::numeric_limits<double>::quiet_NaN();
};

struct AccuracyRow {
  double mean = 1.0;
  double variance = 0.0;
  BetaParams beta = kPerfectAccuracy;
};

/// Baseline row (t = 0) plus modeled years t = 1..T for one metro.
struct AccuracyPrior {
  AccuracyRow baseline;
  std::vector<AccuracyRow> years;
  std::vector<std::string> warnings;
};

/// Every fixed hyperparameter of the model. Defaults are the standard
/// elicitation; all are overridable from the config file.
struct PriorSpec {
  double sigma2_psi = 0.001;
  double sigma2_psi0 = 0.01;
  double sigma2_eta = 0.0001;
  double var_eta0 = 0.0001;
  double mean_eta0 = 0.0;
  double var_pi = 0.0005;
  double sigma2_phi_bar = 0.005;
  double sigma2_phi_i = 0.05;
  double m_phi_bar = 0.94;
  double sigma2_nu_i = 0.01;
  double sigma2_nu_bar = 0.005;
  double lambda_bar_multiplier = 2.0;

  double sheltered_accuracy = 1.0;
  double unsheltered_accuracy = 0.6;
  double accuracy_cap = 0.999;  // largest admissible E[pi]
  DeltaBasis delta_basis = DeltaBasis::kSheltered;
  double rate_change_bound = 0.04;

  // m_phi_bar calibration inputs
  double f0_bar = -5.5;
  double mean_zri_baseline = 1534.0;
  double rent_increase = 100.0;
  double target_rate_ratio = 1.0634;

  std::int64_t psi0_mc_draws = 100000;
  std::uint64_t psi0_mc_seed = 20170101;

  /// Throws ValidationError when a variance is not strictly positive.
  void validate() const;
};

/// Weighted average of sheltered and unsheltered accuracy at the baseline.
double baseline_accuracy_mean(std::int64_t sheltered, std::int64_t unsheltered,
                              double sheltered_accuracy = 1.0, double unsheltered_accuracy = 0.6);

double unsheltered_delta(double delta_bar, std::int64_t sheltered, std::int64_t total,
                         DeltaBasis basis = DeltaBasis::kSheltered);

/// Expected accuracy rows for t = 1..T. `delta` is the per-metro gain
/// (linear) or step size (step). Rows whose mean sits within two standard
/// deviations of 1 get their variance shrunk to ((1 - mean) / 3)^2.
AccuracyPrior accuracy_trajectory(const AccuracyScenario& scenario, double pi0_mean, double delta, int T,
                                  double variance, double cap = 0.999);

/// Full per-metro accuracy prior including the baseline row.
AccuracyPrior accuracy_prior_for(const MetroSeries& series, const AccuracyScenario& scenario,
                                 const PriorSpec& spec);
std::vector<AccuracyPrior> accuracy_priors_for(const Panel& panel, const AccuracyScenario& scenario,
                                               const PriorSpec& spec);

/// Solves (1 + e^{-f0}) / (1 + e^{-f0 - x m}) = target for m by bisection.
double calibrate_phi_mean(double f0_bar, double zri_fraction, double target_ratio);

struct GaussianPrior {
  double mean = 0.0;
  double variance = 1.0;
};

/// E[psi_0] from the count inflated by a Monte Carlo estimate of E[1/pi_0].
GaussianPrior psi0_prior(std::int64_t c0, std::int64_t n0, const AccuracyRow& baseline, std::int64_t mc_draws,
                         Rng& rng, double variance = 0.01);

/// Monte Carlo estimate of E[1/pi] for pi ~ Beta(a, b).
double mc_mean_reciprocal(const BetaParams& beta, std::int64_t draws, Rng& rng);

struct EtaSetup {
  double lambda_bar = 0.0;
  double mean_eta0 = 0.0;
  double var_eta0 = 0.0001;
};

EtaSetup eta0_lambda_setup(std::int64_t n0, const PriorSpec& spec = {});

/// Everything derived from data + PriorSpec that the sampler needs per metro.
struct MetroPrior {
  AccuracyPrior accuracy;
  GaussianPrior psi0;
  EtaSetup eta;
};

std::vector<MetroPrior> elicit_priors(const Panel& panel, const AccuracyScenario& scenario,
                                      const PriorSpec& spec);

}  // namespace hcount

#endif  // HCOUNT_PRIORS_HPP
