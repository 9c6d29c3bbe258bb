// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_IO_HPP
#define HCOUNT_IO_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hcount/gibbs.hpp"
#include "hcount/priors.hpp"
#include "hcount/simulate.hpp"

namespace hcount {

/// Everything a command needs. Every PriorSpec and GibbsConfig field is a key
/// of the flat config file.
struct RunConfig {
  PriorSpec prior;
  GibbsConfig gibbs;
  AccuracyScenario scenario;

  std::string panel;
  std::string geo;
  std::string out_dir = "out";

  /// Replace m_phi_bar by the root of the rate-ratio equation.
  bool calibrate_m_phi_bar = false;
  bool write_draws = true;

  std::vector<double> delta_bar_grid{0.0, 0.01, 0.02, 0.03, 0.04};
  int repro_runs = 10;

  /// Relative ZRI change applied to every metro for the forecast year, unless
  /// zri_next names a CSV (metro_id,zri) with explicit values.
  double forecast_dzri = 0.0;
  std::string zri_next;

  std::vector<double> counterfactual_x{0.0, 0.05, 0.10};
  /// Calendar years; 0 selects the first / last modeled year.
  int rate_from_year = 0;
  int rate_to_year = 0;
  int counterfactual_year = 0;

  SimulationSpec sim;
  std::uint64_t sim_seed = 1;

  void validate() const;
};

/// Applies one key. Throws ValidationError for unknown keys or bad values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
/// Parses "key = value" lines; '#' starts a comment.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path);
/// Canonical key = value snapshot; parse_config(config_to_text(c)) == c.
std::string config_to_text(const RunConfig& cfg);

std::string fnv1a_hex(std::string_view bytes);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Long-format draws: chain,iter,param,metro,year,value.
struct DrawsFile {
  std::vector<std::string> metro_ids;
  int first_year = 0;  // calendar year of modeled t = 0
  std::vector<PosteriorDraws> chains;
};

std::string draws_to_csv(const DrawsFile& file);
DrawsFile parse_draws_csv(const std::string& text);
void save_draws(const DrawsFile& file, const std::string& path);
DrawsFile load_draws(const std::string& path);

std::string ground_truth_to_json(const GroundTruth& truth, int indent = 2);
GroundTruth ground_truth_from_json(const std::string& text);

/// Potential scale reduction factor of one scalar over equal-length chains.
double gelman_rubin(const std::vector<Eigen::VectorXd>& chains);

/// Per metro: max over runs j of |mean(phi_i^{(j)}) - mean(phi_i^{(1)})|.
Eigen::VectorXd reproducibility_deviation(const std::vector<PosteriorDraws>& runs);

}  // namespace hcount

#endif  // HCOUNT_IO_HPP
