// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_PREDICTIVE_HPP
#define HCOUNT_PREDICTIVE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "hcount/gibbs.hpp"

namespace hcount {

struct Summary {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Linear-interpolated empirical quantile (type 7).
double quantile(Eigen::VectorXd values, double q);
/// Mean and central interval at the given level.
Summary summarize(const Eigen::Ref<const Eigen::VectorXd>& draws, double level = 0.95);
/// Mean and the right-tail interval [min, q_level].
Summary summarize_one_sided(const Eigen::Ref<const Eigen::VectorXd>& draws, double level = 0.95);

/// Second hypothetical count per retained draw: pi ~ Beta(a, b), C* ~ Binomial(H, pi).
/// Returns n_draws x (metros * T), same column layout as PosteriorDraws::H.
Eigen::MatrixXd synthetic_count(const PosteriorDraws& draws, const ModelData& data, std::uint64_t seed);

/// Mean and 95% central interval of H per (metro, year); metros x T.
std::vector<std::vector<Summary>> impute_totals(const PosteriorDraws& draws, double level = 0.95);

struct CounterfactualResult {
  double x = 0.0;
  int year = 0;                 // 0-based modeled year
  Eigen::MatrixXd h_increase;   // n_draws x metros: H^x - H
  Eigen::MatrixXd c_increase;   // n_draws x metros: C*^x - C*
  std::vector<Summary> h_summary;
  std::vector<Summary> c_summary;
  std::vector<Summary> h_one_sided;
  std::vector<Summary> c_one_sided;
};

/// Raises the year's ZRI change by x. Baseline and shifted totals are drawn
/// from Binomial(N, logistic(psi)) and Binomial(N, logistic(psi + phi x))
/// with coupled streams, then thinned with a shared accuracy draw.
CounterfactualResult zri_counterfactual(const PosteriorDraws& draws, const ModelData& data, double x, int year,
                                        std::uint64_t seed);

enum class RateClass { kStatusQuo, kEmergency, kDecreasing };
std::string to_string(RateClass c);

struct RateChange {
  Eigen::VectorXd draws;  // per-draw relative change of p = logistic(psi)
  Summary summary;
  RateClass classification = RateClass::kStatusQuo;
};

/// Relative change (p_to - p_from) / p_from of the homelessness rate per draw,
/// classified against +/- bound using the 95% interval.
std::vector<RateChange> rate_change(const PosteriorDraws& draws, int t_from, int t_to, double bound = 0.04);

/// One-year-ahead total homeless H_{T+1}; n_draws x metros. zri_next holds
/// ZRI_{T+1} per metro and zri_last ZRI_T.
Eigen::MatrixXd forecast_next_year(const PosteriorDraws& draws, const ModelData& data,
                                   const Eigen::Ref<const Eigen::VectorXd>& zri_last,
                                   const Eigen::Ref<const Eigen::VectorXd>& zri_next, std::uint64_t seed);

/// One row of the 2016-style summary table.
struct ReportRow {
  std::string metro_id;
  std::int64_t hud_count = 0;
  Summary synthetic;
  Summary total;
  Summary forecast;
};

}  // namespace hcount

#endif  // HCOUNT_PREDICTIVE_HPP
