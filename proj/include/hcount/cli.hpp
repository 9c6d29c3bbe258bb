// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_CLI_HPP
#define HCOUNT_CLI_HPP

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "hcount/gibbs.hpp"
#include "hcount/io.hpp"
#include "hcount/predictive.hpp"

namespace hcount {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

/// Panel, priors and sampler input resolved from a config.
struct PreparedRun {
  Panel panel;
  PriorSpec spec;  // after optional m_phi_bar calibration
  ModelData data;
  std::string prior_hash;
};

PreparedRun prepare_run(const RunConfig& cfg);

/// Report tables as CSV text, plus a plain-text rendering.
struct Reports {
  std::string table;           // last modeled year: synthetic count, total, forecast
  std::string totals;          // every (metro, year)
  std::string rate_change;
  std::string counterfactual;  // (metro, x, mean, lo, hi) curves
  std::string text;
};

Reports build_reports(const RunConfig& cfg, const PreparedRun& run, const PosteriorDraws& draws);

struct RunResult {
  PreparedRun prepared;
  std::vector<PosteriorDraws> chains;
  Reports reports;
  double max_rhat = 0.0;  // NaN with a single chain
};

/// Samples, writes draws, reports and manifest into cfg.out_dir.
RunResult cmd_run(const RunConfig& cfg, std::ostream& log);

struct SweepRow {
  double delta_bar = 0.0;
  std::string metro_id;
  Summary summary;
  RateClass classification = RateClass::kStatusQuo;
  bool flipped = false;  // differs from the first grid point
};
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, std::ostream& log);

struct ReproResult {
  std::vector<std::string> metro_ids;
  Eigen::MatrixXd phi_means;  // runs x metros
  Eigen::VectorXd deviation;  // per metro
};
ReproResult cmd_repro(const RunConfig& cfg, std::ostream& log);

SimulatedPanel cmd_simulate(const RunConfig& cfg, std::ostream& log);

/// Rebuilds the reports from draws saved by a previous run.
Reports cmd_report(const RunConfig& cfg, std::ostream& log);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hcount

#endif  // HCOUNT_CLI_HPP
