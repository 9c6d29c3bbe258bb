// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_SIMULATE_HPP
#define HCOUNT_SIMULATE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcount/data_model.hpp"
#include "hcount/priors.hpp"
#include "hcount/random.hpp"

namespace hcount {

/// Knobs of the forward simulator. Unset optionals are drawn from the prior.
struct SimulationSpec {
  int n_metros = 25;
  int T = 6;
  int first_year = 2010;
  double population_lo = 2.0e5;
  double population_hi = 2.0e6;
  double rate_lo = 0.002;  // baseline homelessness rate range
  double rate_hi = 0.006;
  double sheltered_share_lo = 0.3;
  double sheltered_share_hi = 0.95;
  double zri_lo = 1000.0;
  double zri_hi = 3000.0;
  double dzri_lo = -0.02;  // per-year relative ZRI change range
  double dzri_hi = 0.12;
  double rate_floor = 0.0005;
  AccuracyScenario scenario;

  std::optional<double> phi_bar;
  std::optional<double> nu_bar;
  std::optional<std::vector<double>> phi;
  std::optional<std::vector<double>> nu;
  /// Overrides the innovation variances of the eta and psi walks (e.g. 0).
  std::optional<double> sigma2_eta;
  std::optional<double> sigma2_psi;
  /// When set, every metro shares this ZRI change in every year.
  std::optional<double> fixed_dzri;
};

/// True latent values behind a simulated panel. Paths are metros x (T + 1)
/// with column 0 the baseline year.
struct GroundTruth {
  double phi_bar = 0.0;
  double nu_bar = 0.0;
  Eigen::VectorXd phi;
  Eigen::VectorXd nu;
  Eigen::VectorXd lambda_bar;
  Eigen::MatrixXd eta;
  Eigen::MatrixXd psi;
  Eigen::MatrixXd H;
  Eigen::MatrixXd pi;
  std::vector<bool> below_rate_floor;
};

struct SimulatedPanel {
  Panel panel;
  GroundTruth truth;
};

/// Ancestral sampling of the full generative model.
SimulatedPanel generate_panel(const PriorSpec& prior, const SimulationSpec& sim, Rng& rng);

/// log of the beta-binomial mass P(C | H, a, b).
double log_betabinomial_pmf(std::int64_t C, std::int64_t H, double a, double b);
double betabinomial_pmf(std::int64_t C, std::int64_t H, double a, double b);

/// Exact posterior mass of H on [C, N], index k <-> H = C + k.
Eigen::VectorXd brute_force_H_pmf(std::int64_t N, std::int64_t C, double p, double a, double b);

}  // namespace hcount

#endif  // HCOUNT_SIMULATE_HPP
