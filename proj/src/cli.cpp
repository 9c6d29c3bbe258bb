// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "csv.hpp"

namespace hcount {

namespace fs = std::filesystem;

namespace {

std::string hash_file_or_empty(const std::string& path) {
  return path.empty() ? std::string() : fnv1a_hex(read_text_file(path));
}

std::string priors_fingerprint(const PriorSpec& spec, const std::vector<MetroPrior>& priors) {
  std::string s = "m_phi_bar=" + format_double(spec.m_phi_bar) + "\n";
  for (const auto& p : priors) {
    s += format_double(p.psi0.mean) + "," + format_double(p.psi0.variance) + "," + format_double(p.eta.lambda_bar);
    s += "," + format_double(p.accuracy.baseline.beta.a) + "," + format_double(p.accuracy.baseline.beta.b);
    for (const auto& row : p.accuracy.years) s += "," + format_double(row.beta.a) + "," + format_double(row.beta.b);
    s += "\n";
  }
  return s;
}

/// Runs f(k) for k in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(int n, int threads, F&& f) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int k = 0; k < n; ++k) f(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          f(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int modeled_index(const Panel& panel, int calendar_year, int fallback) {
  if (calendar_year == 0) return fallback;
  const int t = calendar_year - panel.first_year() - 1;
  if (t < 0 || t >= panel.T())
    throw ValidationError("year " + std::to_string(calendar_year) + " is not a modeled year of the panel");
  return t;
}

Eigen::VectorXd next_zri(const RunConfig& cfg, const Panel& panel) {
  const int n = panel.n_metros();
  Eigen::VectorXd next(n);
  if (cfg.zri_next.empty()) {
    for (int i = 0; i < n; ++i) next(i) = panel.metros[i].zri.back() * (1.0 + cfg.forecast_dzri);
    return next;
  }
  std::vector<std::string> header;
  const auto rows = csv::parse(read_text_file(cfg.zri_next), header);
  csv::expect_header(header, {"metro_id", "zri"}, "zri_next file");
  next.setConstant(NAN);
  for (const auto& r : rows) {
    if (r.fields.size() != 2) throw ValidationError("zri_next row " + std::to_string(r.line) + ": expected 2 fields");
    const int i = panel.index_of(r.fields[0]);
    if (i < 0) throw ValidationError("zri_next row " + std::to_string(r.line) + ": unknown metro '" + r.fields[0] + "'");
    next(i) = csv::to_double(r.fields[1], r.line, "zri");
    if (!(next(i) > 0.0)) throw ValidationError("zri_next row " + std::to_string(r.line) + ": zri must be positive");
  }
  for (int i = 0; i < n; ++i)
    if (std::isnan(next(i))) throw ValidationError("zri_next has no value for metro '" + panel.metros[i].metro_id + "'");
  return next;
}

std::string f(double v) { return format_double(v); }

std::string summary_fields(const Summary& s) { return f(s.mean) + "," + f(s.lo) + "," + f(s.hi); }

std::string fixed(double v, int digits = 0) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

double max_rhat(const std::vector<PosteriorDraws>& chains, nlohmann::json& detail) {
  if (chains.size() < 2 || chains.front().n_draws() < 2) return NAN;
  const int n = chains.front().n_metros;
  double worst = 1.0;
  auto scalar = [&](auto pick) {
    std::vector<Eigen::VectorXd> xs;
    for (const auto& c : chains) xs.push_back(pick(c));
    const double r = gelman_rubin(xs);
    worst = std::max(worst, r);
    return r;
  };
  std::vector<double> phi(n), nu(n);
  for (int i = 0; i < n; ++i) {
    phi[i] = scalar([i](const PosteriorDraws& d) -> Eigen::VectorXd { return d.phi.col(i); });
    nu[i] = scalar([i](const PosteriorDraws& d) -> Eigen::VectorXd { return d.nu.col(i); });
  }
  detail["rhat_phi"] = phi;
  detail["rhat_nu"] = nu;
  detail["rhat_phi_bar"] = scalar([](const PosteriorDraws& d) -> Eigen::VectorXd { return d.phi_bar; });
  detail["rhat_nu_bar"] = scalar([](const PosteriorDraws& d) -> Eigen::VectorXd { return d.nu_bar; });
  detail["max_rhat"] = worst;
  return worst;
}

}  // namespace

PreparedRun prepare_run(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.panel.empty()) throw ValidationError("no panel given (config key 'panel' or --panel)");
  PreparedRun r;
  r.panel = load_panel(cfg.panel, cfg.geo.empty() ? std::nullopt : std::optional<std::string>(cfg.geo));
  r.spec = cfg.prior;
  if (cfg.calibrate_m_phi_bar)
    r.spec.m_phi_bar = calibrate_phi_mean(r.spec.f0_bar, r.spec.rent_increase / r.spec.mean_zri_baseline,
                                          r.spec.target_rate_ratio);
  auto priors = elicit_priors(r.panel, cfg.scenario, r.spec);
  r.prior_hash = fnv1a_hex(priors_fingerprint(r.spec, priors));
  r.data = make_model_data(r.panel, std::move(priors), r.spec);
  return r;
}

Reports build_reports(const RunConfig& cfg, const PreparedRun& run, const PosteriorDraws& draws) {
  const Panel& panel = run.panel;
  const int n = panel.n_metros();
  const int T = panel.T();
  if (draws.n_metros != n || draws.T != T) throw ValidationError("draws do not match the panel shape");
  const std::uint64_t seed = cfg.gibbs.seed;
  const int last = T - 1;

  const Eigen::MatrixXd synth = synthetic_count(draws, run.data, seed);
  const auto totals = impute_totals(draws);

  Eigen::VectorXd zri_last(n);
  for (int i = 0; i < n; ++i) zri_last(i) = panel.metros[i].zri.back();
  const Eigen::MatrixXd forecast = forecast_next_year(draws, run.data, zri_last, next_zri(cfg, panel), seed);

  Reports rep;
  rep.table =
      "metro_id,year,hud_count,synthetic_mean,synthetic_lo,synthetic_hi,total_mean,total_lo,total_hi,"
      "forecast_year,forecast_mean,forecast_lo,forecast_hi\n";
  rep.totals = "metro_id,year,hud_count,synthetic_mean,synthetic_lo,synthetic_hi,total_mean,total_lo,total_hi\n";
  for (int i = 0; i < n; ++i) {
    const auto& m = panel.metros[i];
    for (int t = 0; t < T; ++t) {
      const Summary s = summarize(synth.col(draws.col(i, t)));
      rep.totals += m.metro_id + "," + std::to_string(m.calendar_year(t + 1)) + "," + std::to_string(m.count[t + 1]) +
                    "," + summary_fields(s) + "," + summary_fields(totals[i][t]) + "\n";
    }
    const Summary s = summarize(synth.col(draws.col(i, last)));
    const Summary fc = summarize(forecast.col(i));
    rep.table += m.metro_id + "," + std::to_string(m.calendar_year(T)) + "," + std::to_string(m.count[T]) + "," +
                 summary_fields(s) + "," + summary_fields(totals[i][last]) + "," +
                 std::to_string(m.calendar_year(T + 1)) + "," + summary_fields(fc) + "\n";
  }

  const int t_from = modeled_index(panel, cfg.rate_from_year, 0);
  const int t_to = modeled_index(panel, cfg.rate_to_year, last);
  const auto rc = rate_change(draws, t_from, t_to, run.spec.rate_change_bound);
  rep.rate_change = "metro_id,from_year,to_year,mean,lo,hi,classification\n";
  for (int i = 0; i < n; ++i)
    rep.rate_change += panel.metros[i].metro_id + "," + std::to_string(panel.first_year() + 1 + t_from) + "," +
                       std::to_string(panel.first_year() + 1 + t_to) + "," + summary_fields(rc[i].summary) + "," +
                       to_string(rc[i].classification) + "\n";

  const int cf_year = modeled_index(panel, cfg.counterfactual_year, last);
  rep.counterfactual =
      "metro_id,year,x,h_mean,h_lo,h_hi,h_one_sided_lo,h_one_sided_hi,c_mean,c_lo,c_hi,c_one_sided_lo,"
      "c_one_sided_hi\n";
  for (double x : cfg.counterfactual_x) {
    const auto cf = zri_counterfactual(draws, run.data, x, cf_year, seed);
    for (int i = 0; i < n; ++i)
      rep.counterfactual += panel.metros[i].metro_id + "," + std::to_string(panel.first_year() + 1 + cf_year) + "," +
                            f(x) + "," + summary_fields(cf.h_summary[i]) + "," + f(cf.h_one_sided[i].lo) + "," +
                            f(cf.h_one_sided[i].hi) + "," + summary_fields(cf.c_summary[i]) + "," +
                            f(cf.c_one_sided[i].lo) + "," + f(cf.c_one_sided[i].hi) + "\n";
  }

  std::ostringstream txt;
  txt << "Posterior summary, " << draws.n_draws() << " draws, year " << panel.first_year() + T << "\n";
  txt << std::left << std::setw(18) << "metro" << std::right << std::setw(9) << "count" << std::setw(26)
      << "synthetic count" << std::setw(26) << "total homeless" << std::setw(26) << "forecast" << std::setw(14)
      << "rate change" << "\n";
  for (int i = 0; i < n; ++i) {
    const Summary s = summarize(synth.col(draws.col(i, last)));
    const Summary fc = summarize(forecast.col(i));
    auto cell = [](const Summary& x) {
      return fixed(x.mean) + " (" + fixed(x.lo) + ", " + fixed(x.hi) + ")";
    };
    txt << std::left << std::setw(18) << panel.metros[i].metro_id << std::right << std::setw(9)
        << panel.metros[i].count[T] << std::setw(26) << cell(s) << std::setw(26) << cell(totals[i][last])
        << std::setw(26) << cell(fc) << std::setw(14) << to_string(rc[i].classification) << "\n";
  }
  rep.text = txt.str();
  return rep;
}

RunResult cmd_run(const RunConfig& cfg, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  res.prepared = prepare_run(cfg);
  const std::string config_text = config_to_text(cfg);
  const std::string config_hash = fnv1a_hex(config_text);

  res.chains = run_chains(res.prepared.data, cfg.gibbs);
  for (auto& c : res.chains) {
    c.config_hash = config_hash;
    c.prior_hash = res.prepared.prior_hash;
  }
  const PosteriorDraws all = combine(res.chains);
  res.reports = build_reports(cfg, res.prepared, all);

  nlohmann::json diag;
  res.max_rhat = max_rhat(res.chains, diag);

  ensure_dir(cfg.out_dir);
  if (cfg.write_draws) {
    DrawsFile df;
    for (const auto& m : res.prepared.panel.metros) df.metro_ids.push_back(m.metro_id);
    df.first_year = res.prepared.panel.first_year() + 1;
    df.chains = res.chains;
    save_draws(df, path_in(cfg.out_dir, "draws.csv"));
  }
  write_text_file(path_in(cfg.out_dir, "summary.csv"), res.reports.table);
  write_text_file(path_in(cfg.out_dir, "totals.csv"), res.reports.totals);
  write_text_file(path_in(cfg.out_dir, "rate_change.csv"), res.reports.rate_change);
  write_text_file(path_in(cfg.out_dir, "counterfactual.csv"), res.reports.counterfactual);
  write_text_file(path_in(cfg.out_dir, "summary.txt"), res.reports.text);
  write_text_file(path_in(cfg.out_dir, "config.cfg"), config_text);

  const std::string panel_hash = hash_file_or_empty(cfg.panel);
  const std::string geo_hash = hash_file_or_empty(cfg.geo);
  const std::string zri_hash = hash_file_or_empty(cfg.zri_next);
  nlohmann::json man;
  man["command"] = "run";
  man["config"] = config_text;
  man["config_hash"] = config_hash;
  man["inputs"] = {{"panel", {{"path", cfg.panel}, {"hash", panel_hash}}},
                   {"geo", {{"path", cfg.geo}, {"hash", geo_hash}}},
                   {"zri_next", {{"path", cfg.zri_next}, {"hash", zri_hash}}}};
  man["run_hash"] = fnv1a_hex(config_hash + panel_hash + geo_hash + zri_hash);
  man["prior_hash"] = res.prepared.prior_hash;
  man["m_phi_bar"] = res.prepared.spec.m_phi_bar;
  man["seed"] = cfg.gibbs.seed;
  std::vector<int> chain_ids;
  for (const auto& c : res.chains) chain_ids.push_back(c.chain);
  man["chains"] = chain_ids;
  man["draws_per_chain"] = cfg.gibbs.retained_per_chain();
  man["diagnostics"] = diag.is_null() ? nlohmann::json::object() : diag;
  std::vector<std::string> warnings;
  for (int i = 0; i < res.prepared.panel.n_metros(); ++i)
    for (const auto& w : res.prepared.data.priors[i].accuracy.warnings)
      warnings.push_back(res.prepared.panel.metros[i].metro_id + ": " + w);
  man["warnings"] = warnings;
  man["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text_file(path_in(cfg.out_dir, "manifest.json"), man.dump(2) + "\n");

  log << res.reports.text;
  if (!std::isnan(res.max_rhat)) log << "max R-hat " << fixed(res.max_rhat, 4) << "\n";
  log << "wrote " << cfg.out_dir << "\n";
  return res;
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto& grid = cfg.delta_bar_grid;
  const int G = static_cast<int>(grid.size());
  std::vector<std::vector<RateChange>> changes(G);
  std::vector<int> years(2, 0);
  Panel panel;
  parallel_for(G, cfg.gibbs.threads, [&](int g) {
    RunConfig c = cfg;
    c.scenario.delta_bar = grid[g];
    if (c.scenario.kind == ScenarioKind::kConstant) c.scenario.kind = ScenarioKind::kLinear;
    c.gibbs.threads = 1;
    const PreparedRun run = prepare_run(c);
    const PosteriorDraws all = combine(run_chains(run.data, c.gibbs));
    const int t_from = modeled_index(run.panel, c.rate_from_year, 0);
    const int t_to = modeled_index(run.panel, c.rate_to_year, run.panel.T() - 1);
    changes[g] = rate_change(all, t_from, t_to, run.spec.rate_change_bound);
    if (g == 0) {
      panel = run.panel;
      years = {run.panel.first_year() + 1 + t_from, run.panel.first_year() + 1 + t_to};
    }
  });

  std::vector<SweepRow> rows;
  std::string out = "delta_bar,metro_id,from_year,to_year,mean,lo,hi,classification,flipped\n";
  for (int g = 0; g < G; ++g) {
    for (int i = 0; i < panel.n_metros(); ++i) {
      SweepRow r;
      r.delta_bar = grid[g];
      r.metro_id = panel.metros[i].metro_id;
      r.summary = changes[g][i].summary;
      r.classification = changes[g][i].classification;
      r.flipped = r.classification != changes[0][i].classification;
      out += f(r.delta_bar) + "," + r.metro_id + "," + std::to_string(years[0]) + "," + std::to_string(years[1]) +
             "," + summary_fields(r.summary) + "," + to_string(r.classification) + "," +
             (r.flipped ? "true" : "false") + "\n";
      rows.push_back(std::move(r));
    }
  }
  ensure_dir(cfg.out_dir);
  write_text_file(path_in(cfg.out_dir, "sweep.csv"), out);
  for (const auto& r : rows)
    if (r.flipped)
      log << r.metro_id << ": " << to_string(r.classification) << " at delta_bar " << f(r.delta_bar) << "\n";
  log << "wrote " << path_in(cfg.out_dir, "sweep.csv") << "\n";
  return rows;
}

ReproResult cmd_repro(const RunConfig& cfg, std::ostream& log) {
  const PreparedRun run = prepare_run(cfg);
  const int R = cfg.repro_runs;
  std::vector<PosteriorDraws> runs(R);
  parallel_for(R, cfg.gibbs.threads, [&](int j) {
    GibbsConfig g = cfg.gibbs;
    g.seed = cfg.gibbs.seed + static_cast<std::uint64_t>(j);
    g.n_chains = 1;
    runs[j] = run_chain(run.data, g, 0);
  });

  ReproResult res;
  for (const auto& m : run.panel.metros) res.metro_ids.push_back(m.metro_id);
  const int n = run.panel.n_metros();
  res.phi_means.resize(R, n);
  for (int j = 0; j < R; ++j) res.phi_means.row(j) = runs[j].phi.colwise().mean();
  res.deviation = reproducibility_deviation(runs);

  std::string dev = "metro_id,max_abs_deviation\n";
  for (int i = 0; i < n; ++i) dev += res.metro_ids[i] + "," + f(res.deviation(i)) + "\n";
  std::string means = "run,seed,metro_id,phi_mean\n";
  for (int j = 0; j < R; ++j)
    for (int i = 0; i < n; ++i)
      means += std::to_string(j) + "," + std::to_string(cfg.gibbs.seed + static_cast<std::uint64_t>(j)) + "," +
               res.metro_ids[i] + "," + f(res.phi_means(j, i)) + "\n";
  ensure_dir(cfg.out_dir);
  write_text_file(path_in(cfg.out_dir, "repro.csv"), dev);
  write_text_file(path_in(cfg.out_dir, "repro_means.csv"), means);
  log << "max deviation " << f(res.deviation.maxCoeff()) << " over " << R << " runs\n";
  log << "wrote " << path_in(cfg.out_dir, "repro.csv") << "\n";
  return res;
}

SimulatedPanel cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  SimulationSpec sim = cfg.sim;
  sim.scenario = cfg.scenario;
  Rng rng = make_stream(cfg.sim_seed, 0, 0, Stream::kSimulate, 0);
  SimulatedPanel out = generate_panel(cfg.prior, sim, rng);
  ensure_dir(cfg.out_dir);
  save_panel(out.panel, path_in(cfg.out_dir, "panel.csv"));
  write_text_file(path_in(cfg.out_dir, "truth.json"), ground_truth_to_json(out.truth));
  for (int i = 0; i < out.panel.n_metros(); ++i)
    if (out.truth.below_rate_floor[i]) log << "warning: " << out.panel.metros[i].metro_id << " falls below the rate floor\n";
  log << "wrote " << path_in(cfg.out_dir, "panel.csv") << " and truth.json\n";
  return out;
}

Reports cmd_report(const RunConfig& cfg, std::ostream& log) {
  const PreparedRun run = prepare_run(cfg);
  const DrawsFile df = load_draws(path_in(cfg.out_dir, "draws.csv"));
  std::vector<std::string> ids;
  for (const auto& m : run.panel.metros) ids.push_back(m.metro_id);
  if (df.metro_ids != ids || df.first_year != run.panel.first_year() + 1)
    throw ValidationError("draws.csv does not match the panel's metros and years");
  const Reports rep = build_reports(cfg, run, combine(df.chains));
  write_text_file(path_in(cfg.out_dir, "summary.csv"), rep.table);
  write_text_file(path_in(cfg.out_dir, "totals.csv"), rep.totals);
  write_text_file(path_in(cfg.out_dir, "rate_change.csv"), rep.rate_change);
  write_text_file(path_in(cfg.out_dir, "counterfactual.csv"), rep.counterfactual);
  write_text_file(path_in(cfg.out_dir, "summary.txt"), rep.text);
  log << rep.text;
  return rep;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian estimation of total homeless counts from point-in-time counts"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> panel, geo, seed, chains, burnin, samples, delta_bar, scenario, tau, out_dir, threads;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--panel", panel, "panel CSV");
    sub->add_option("--geo", geo, "geo CSV with continuum and county records");
    sub->add_option("--seed", seed, "base random seed");
    sub->add_option("--chains", chains, "number of chains");
    sub->add_option("--burnin", burnin, "burn-in sweeps per chain");
    sub->add_option("--samples", samples, "retained sweeps per chain");
    sub->add_option("--delta-bar", delta_bar, "annual accuracy gain");
    sub->add_option("--scenario", scenario, "accuracy trajectory")
        ->check(CLI::IsMember({"constant", "linear", "step"}));
    sub->add_option("--tau", tau, "first modeled year of the accuracy step (1-based)");
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads");
  };
  CLI::App* run = app.add_subcommand("run", "sample the posterior and write reports");
  CLI::App* sweep = app.add_subcommand("sweep", "rate-change sensitivity over the delta_bar grid");
  CLI::App* repro = app.add_subcommand("repro", "reproducibility of posterior means across seeds");
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic panel with ground truth");
  CLI::App* report = app.add_subcommand("report", "rebuild reports from saved draws");
  for (auto* sub : {run, sweep, repro, simulate, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    const std::pair<const char*, std::optional<std::string>*> flags[] = {
        {"panel", &panel},         {"geo", &geo},       {"seed", &seed},       {"n_chains", &chains},
        {"burn_in", &burnin},      {"n_samples", &samples}, {"delta_bar", &delta_bar}, {"scenario", &scenario},
        {"tau", &tau},             {"out_dir", &out_dir}, {"threads", &threads}};
    for (const auto& [key, value] : flags)
      if (*value) set_config_value(cfg, key, **value);

    if (run->parsed()) cmd_run(cfg, out);
    else if (sweep->parsed()) cmd_sweep(cfg, out);
    else if (repro->parsed()) cmd_repro(cfg, out);
    else if (simulate->parsed()) cmd_simulate(cfg, out);
    else cmd_report(cfg, out);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace hcount
