// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/io.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <limits>
#include <sstream>
#include <type_traits>

#include "csv.hpp"

namespace hcount {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& want) {
  throw ValidationError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || p != end) bad_value(key, v, "a number");
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || p != end) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || p != end) bad_value(key, v, "a nonnegative integer");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (csv::trim(v).empty()) return out;
  for (const auto& f : csv::split(v)) out.push_back(parse_double(key, f));
  return out;
}

std::string list_text(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += (s.empty() ? "" : ",") + format_double(x);
  return s;
}

template <class M>
Key dbl(std::string name, M member) {
  return {name, [name, member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_double(name, v); },
          [member](const RunConfig& c) { return format_double(std::invoke(member, c)); }};
}

template <class M>
Key integer(std::string name, M member) {
  return {name,
          [name, member](RunConfig& c, const std::string& v) {
            const auto x = parse_int(name, v);
            using T = std::remove_reference_t<decltype(std::invoke(member, c))>;
            if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) bad_value(name, v, "a smaller integer");
            std::invoke(member, c) = static_cast<T>(x);
          },
          [member](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <class M>
Key unsigned_key(std::string name, M member) {
  return {name, [name, member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_uint(name, v); },
          [member](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <class M>
Key boolean(std::string name, M member) {
  return {name, [name, member](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_bool(name, v); },
          [member](const RunConfig& c) { return std::string(std::invoke(member, c) ? "true" : "false"); }};
}

template <class M>
Key text(std::string name, M member) {
  return {name, [member](RunConfig& c, const std::string& v) { std::invoke(member, c) = v; },
          [member](const RunConfig& c) { return std::invoke(member, c); }};
}

template <class M>
Key optional_dbl(std::string name, M member) {
  return {name,
          [name, member](RunConfig& c, const std::string& v) {
            if (v.empty()) std::invoke(member, c).reset();
            else std::invoke(member, c) = parse_double(name, v);
          },
          [member](const RunConfig& c) {
            const auto& o = std::invoke(member, c);
            return o ? format_double(*o) : std::string();
          }};
}

// Projections for nested members.
#define HC_FIELD(path) [](auto& c) -> auto& { return c.path; }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    // model hyperparameters
    k.push_back(dbl("sigma2_psi", HC_FIELD(prior.sigma2_psi)));
    k.push_back(dbl("sigma2_psi0", HC_FIELD(prior.sigma2_psi0)));
    k.push_back(dbl("sigma2_eta", HC_FIELD(prior.sigma2_eta)));
    k.push_back(dbl("mean_eta0", HC_FIELD(prior.mean_eta0)));
    k.push_back(dbl("var_eta0", HC_FIELD(prior.var_eta0)));
    k.push_back(dbl("var_pi", HC_FIELD(prior.var_pi)));
    k.push_back(dbl("sigma2_phi_bar", HC_FIELD(prior.sigma2_phi_bar)));
    k.push_back(dbl("sigma2_phi_i", HC_FIELD(prior.sigma2_phi_i)));
    k.push_back(dbl("m_phi_bar", HC_FIELD(prior.m_phi_bar)));
    k.push_back(boolean("calibrate_m_phi_bar", HC_FIELD(calibrate_m_phi_bar)));
    k.push_back(dbl("sigma2_nu_i", HC_FIELD(prior.sigma2_nu_i)));
    k.push_back(dbl("sigma2_nu_bar", HC_FIELD(prior.sigma2_nu_bar)));
    k.push_back(dbl("lambda_bar_multiplier", HC_FIELD(prior.lambda_bar_multiplier)));
    k.push_back(dbl("sheltered_accuracy", HC_FIELD(prior.sheltered_accuracy)));
    k.push_back(dbl("unsheltered_accuracy", HC_FIELD(prior.unsheltered_accuracy)));
    k.push_back(dbl("accuracy_cap", HC_FIELD(prior.accuracy_cap)));
    k.push_back({"delta_basis",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "sheltered") c.prior.delta_basis = DeltaBasis::kSheltered;
                   else if (v == "unsheltered") c.prior.delta_basis = DeltaBasis::kUnsheltered;
                   else bad_value("delta_basis", v, "sheltered or unsheltered");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.prior.delta_basis == DeltaBasis::kSheltered ? "sheltered" : "unsheltered");
                 }});
    k.push_back(dbl("rate_change_bound", HC_FIELD(prior.rate_change_bound)));
    k.push_back(dbl("f0_bar", HC_FIELD(prior.f0_bar)));
    k.push_back(dbl("mean_zri_baseline", HC_FIELD(prior.mean_zri_baseline)));
    k.push_back(dbl("rent_increase", HC_FIELD(prior.rent_increase)));
    k.push_back(dbl("target_rate_ratio", HC_FIELD(prior.target_rate_ratio)));
    k.push_back(integer("psi0_mc_draws", HC_FIELD(prior.psi0_mc_draws)));
    k.push_back(unsigned_key("psi0_mc_seed", HC_FIELD(prior.psi0_mc_seed)));

    // accuracy scenario
    k.push_back({"scenario",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "constant") c.scenario.kind = ScenarioKind::kConstant;
                   else if (v == "linear") c.scenario.kind = ScenarioKind::kLinear;
                   else if (v == "step") c.scenario.kind = ScenarioKind::kStep;
                   else bad_value("scenario", v, "constant, linear or step");
                 },
                 [](const RunConfig& c) {
                   switch (c.scenario.kind) {
                     case ScenarioKind::kLinear: return std::string("linear");
                     case ScenarioKind::kStep: return std::string("step");
                     default: return std::string("constant");
                   }
                 }});
    k.push_back(dbl("delta_bar", HC_FIELD(scenario.delta_bar)));
    k.push_back(integer("tau", HC_FIELD(scenario.tau)));
    k.push_back({"step_size",
                 [](RunConfig& c, const std::string& v) {
                   c.scenario.step_size = v.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                    : parse_double("step_size", v);
                 },
                 [](const RunConfig& c) {
                   return std::isnan(c.scenario.step_size) ? std::string() : format_double(c.scenario.step_size);
                 }});

    // sampler
    k.push_back(integer("burn_in", HC_FIELD(gibbs.burn_in)));
    k.push_back(integer("n_samples", HC_FIELD(gibbs.n_samples)));
    k.push_back(integer("n_chains", HC_FIELD(gibbs.n_chains)));
    k.push_back(unsigned_key("seed", HC_FIELD(gibbs.seed)));
    k.push_back(integer("thinning", HC_FIELD(gibbs.thinning)));
    k.push_back(dbl("tail_threshold", HC_FIELD(gibbs.tail_threshold)));
    k.push_back({"h_mode",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "beta_binomial") c.gibbs.h_mode = HUpdateMode::kBetaBinomial;
                   else if (v == "pi_draw") c.gibbs.h_mode = HUpdateMode::kPiDraw;
                   else bad_value("h_mode", v, "beta_binomial or pi_draw");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.gibbs.h_mode == HUpdateMode::kBetaBinomial ? "beta_binomial" : "pi_draw");
                 }});
    k.push_back(integer("threads", HC_FIELD(gibbs.threads)));

    // inputs, outputs and analyses
    k.push_back(text("panel", HC_FIELD(panel)));
    k.push_back(text("geo", HC_FIELD(geo)));
    k.push_back(text("out_dir", HC_FIELD(out_dir)));
    k.push_back(boolean("write_draws", HC_FIELD(write_draws)));
    k.push_back({"delta_bar_grid",
                 [](RunConfig& c, const std::string& v) { c.delta_bar_grid = parse_list("delta_bar_grid", v); },
                 [](const RunConfig& c) { return list_text(c.delta_bar_grid); }});
    k.push_back(integer("repro_runs", HC_FIELD(repro_runs)));
    k.push_back(dbl("forecast_dzri", HC_FIELD(forecast_dzri)));
    k.push_back(text("zri_next", HC_FIELD(zri_next)));
    k.push_back({"counterfactual_x",
                 [](RunConfig& c, const std::string& v) { c.counterfactual_x = parse_list("counterfactual_x", v); },
                 [](const RunConfig& c) { return list_text(c.counterfactual_x); }});
    k.push_back(integer("counterfactual_year", HC_FIELD(counterfactual_year)));
    k.push_back(integer("rate_from_year", HC_FIELD(rate_from_year)));
    k.push_back(integer("rate_to_year", HC_FIELD(rate_to_year)));

    // simulator
    k.push_back(unsigned_key("sim_seed", HC_FIELD(sim_seed)));
    k.push_back(integer("sim_n_metros", HC_FIELD(sim.n_metros)));
    k.push_back(integer("sim_T", HC_FIELD(sim.T)));
    k.push_back(integer("sim_first_year", HC_FIELD(sim.first_year)));
    k.push_back(dbl("sim_population_lo", HC_FIELD(sim.population_lo)));
    k.push_back(dbl("sim_population_hi", HC_FIELD(sim.population_hi)));
    k.push_back(dbl("sim_rate_lo", HC_FIELD(sim.rate_lo)));
    k.push_back(dbl("sim_rate_hi", HC_FIELD(sim.rate_hi)));
    k.push_back(dbl("sim_sheltered_share_lo", HC_FIELD(sim.sheltered_share_lo)));
    k.push_back(dbl("sim_sheltered_share_hi", HC_FIELD(sim.sheltered_share_hi)));
    k.push_back(dbl("sim_zri_lo", HC_FIELD(sim.zri_lo)));
    k.push_back(dbl("sim_zri_hi", HC_FIELD(sim.zri_hi)));
    k.push_back(dbl("sim_dzri_lo", HC_FIELD(sim.dzri_lo)));
    k.push_back(dbl("sim_dzri_hi", HC_FIELD(sim.dzri_hi)));
    k.push_back(dbl("sim_rate_floor", HC_FIELD(sim.rate_floor)));
    k.push_back(optional_dbl("sim_phi_bar", HC_FIELD(sim.phi_bar)));
    k.push_back(optional_dbl("sim_nu_bar", HC_FIELD(sim.nu_bar)));
    k.push_back(optional_dbl("sim_sigma2_eta", HC_FIELD(sim.sigma2_eta)));
    k.push_back(optional_dbl("sim_sigma2_psi", HC_FIELD(sim.sigma2_psi)));
    k.push_back(optional_dbl("sim_fixed_dzri", HC_FIELD(sim.fixed_dzri)));
    return k;
  }();
  return table;
}

#undef HC_FIELD

}  // namespace

void RunConfig::validate() const {
  prior.validate();
  gibbs.validate();
  if (scenario.tau < 1) throw ValidationError("tau must be at least 1");
  if (!std::isfinite(scenario.delta_bar)) throw ValidationError("delta_bar must be finite");
  if (repro_runs < 2) throw ValidationError("repro_runs must be at least 2");
  if (delta_bar_grid.empty()) throw ValidationError("delta_bar_grid must not be empty");
  for (double x : counterfactual_x)
    if (!(x >= 0.0)) throw ValidationError("counterfactual_x values must be nonnegative");
  if (!(forecast_dzri > -1.0)) throw ValidationError("forecast_dzri must exceed -1");
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ValidationError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = csv::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set_config_value(base, csv::trim(t.substr(0, eq)), csv::trim(t.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::string config_to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text_file(const std::string& path) { return csv::read_file(path); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

// ---- posterior draws ------------------------------------------------------

std::string draws_to_csv(const DrawsFile& file) {
  std::string out = "chain,iter,param,metro,year,value\n";
  const auto& ids = file.metro_ids;
  for (const auto& d : file.chains) {
    if (static_cast<int>(ids.size()) != d.n_metros) throw std::invalid_argument("draws: metro id count mismatch");
    const std::string chain = std::to_string(d.chain) + ",";
    for (Eigen::Index m = 0; m < d.n_draws(); ++m) {
      const std::string prefix = chain + std::to_string(m) + ",";
      for (int i = 0; i < d.n_metros; ++i) {
        for (int t = 0; t < d.T; ++t) {
          const auto c = d.col(i, t);
          const std::string where = "," + ids[i] + "," + std::to_string(file.first_year + t) + ",";
          out += prefix + "eta" + where + format_double(d.eta(m, c)) + "\n";
          out += prefix + "psi" + where + format_double(d.psi(m, c)) + "\n";
          out += prefix + "H" + where + format_double(d.H(m, c)) + "\n";
        }
        out += prefix + "nu," + ids[i] + ",," + format_double(d.nu(m, i)) + "\n";
        out += prefix + "phi," + ids[i] + ",," + format_double(d.phi(m, i)) + "\n";
      }
      out += prefix + "nu_bar,,," + format_double(d.nu_bar(m)) + "\n";
      out += prefix + "phi_bar,,," + format_double(d.phi_bar(m)) + "\n";
    }
  }
  return out;
}

DrawsFile parse_draws_csv(const std::string& text) {
  std::vector<std::string> header;
  const auto rows = csv::parse(text, header);
  csv::expect_header(header, {"chain", "iter", "param", "metro", "year", "value"}, "draws file");

  struct Cell {
    int chain;
    std::int64_t iter;
    int param;
    int metro;
    int year;
    double value;
  };
  static const std::map<std::string, int> kParams{{"eta", 0}, {"psi", 1}, {"H", 2},      {"nu", 3},
                                                  {"phi", 4}, {"nu_bar", 5}, {"phi_bar", 6}};
  DrawsFile file;
  std::map<std::string, int> metro_index;
  std::vector<Cell> cells;
  cells.reserve(rows.size());
  int min_year = std::numeric_limits<int>::max();
  int max_year = std::numeric_limits<int>::min();
  int max_chain = -1;
  for (const auto& r : rows) {
    if (r.fields.size() != 6) throw ValidationError("row " + std::to_string(r.line) + ": expected 6 fields");
    Cell c{};
    c.chain = static_cast<int>(csv::to_int(r.fields[0], r.line, "chain"));
    c.iter = csv::to_int(r.fields[1], r.line, "iter");
    const auto p = kParams.find(r.fields[2]);
    if (p == kParams.end()) throw ValidationError("row " + std::to_string(r.line) + ": unknown param '" + r.fields[2] + "'");
    c.param = p->second;
    c.metro = -1;
    if (c.param <= 4) {
      const auto [it, inserted] = metro_index.try_emplace(r.fields[3], static_cast<int>(file.metro_ids.size()));
      if (inserted) file.metro_ids.push_back(r.fields[3]);
      c.metro = it->second;
    }
    c.year = 0;
    if (c.param <= 2) {
      c.year = static_cast<int>(csv::to_int(r.fields[4], r.line, "year"));
      min_year = std::min(min_year, c.year);
      max_year = std::max(max_year, c.year);
    }
    c.value = csv::to_double(r.fields[5], r.line, "value");
    if (c.chain < 0 || c.iter < 0) throw ValidationError("row " + std::to_string(r.line) + ": negative index");
    max_chain = std::max(max_chain, c.chain);
    cells.push_back(c);
  }
  if (cells.empty()) throw ValidationError("draws file has no rows");
  const int n = static_cast<int>(file.metro_ids.size());
  const int T = min_year <= max_year ? max_year - min_year + 1 : 0;
  file.first_year = T > 0 ? min_year : 0;

  std::vector<std::int64_t> n_iter(max_chain + 1, 0);
  for (const auto& c : cells) n_iter[c.chain] = std::max(n_iter[c.chain], c.iter + 1);
  file.chains.resize(max_chain + 1);
  for (int ch = 0; ch <= max_chain; ++ch) {
    auto& d = file.chains[ch];
    const auto M = n_iter[ch];
    d.n_metros = n;
    d.T = T;
    d.chain = ch;
    d.eta = Eigen::MatrixXd::Constant(M, n * T, NAN);
    d.psi = d.eta;
    d.H = d.eta;
    d.nu = Eigen::MatrixXd::Constant(M, n, NAN);
    d.phi = d.nu;
    d.nu_bar = Eigen::VectorXd::Constant(M, NAN);
    d.phi_bar = d.nu_bar;
  }
  for (const auto& c : cells) {
    auto& d = file.chains[c.chain];
    const auto col = c.param <= 2 ? d.col(c.metro, c.year - file.first_year) : 0;
    switch (c.param) {
      case 0: d.eta(c.iter, col) = c.value; break;
      case 1: d.psi(c.iter, col) = c.value; break;
      case 2: d.H(c.iter, col) = c.value; break;
      case 3: d.nu(c.iter, c.metro) = c.value; break;
      case 4: d.phi(c.iter, c.metro) = c.value; break;
      case 5: d.nu_bar(c.iter) = c.value; break;
      default: d.phi_bar(c.iter) = c.value; break;
    }
  }
  for (const auto& d : file.chains) {
    const bool complete = !d.eta.hasNaN() && !d.psi.hasNaN() && !d.H.hasNaN() && !d.nu.hasNaN() && !d.phi.hasNaN() &&
                          !d.nu_bar.hasNaN() && !d.phi_bar.hasNaN();
    if (!complete) throw ValidationError("draws file: chain " + std::to_string(d.chain) + " has missing values");
  }
  return file;
}

void save_draws(const DrawsFile& file, const std::string& path) { write_text_file(path, draws_to_csv(file)); }

DrawsFile load_draws(const std::string& path) { return parse_draws_csv(read_text_file(path)); }

// ---- ground truth ---------------------------------------------------------

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != c) throw ValidationError("ground truth: ragged matrix");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string ground_truth_to_json(const GroundTruth& g, int indent) {
  nlohmann::json j;
  j["phi_bar"] = g.phi_bar;
  j["nu_bar"] = g.nu_bar;
  j["phi"] = to_std(g.phi);
  j["nu"] = to_std(g.nu);
  j["lambda_bar"] = to_std(g.lambda_bar);
  j["eta"] = matrix_json(g.eta);
  j["psi"] = matrix_json(g.psi);
  j["H"] = matrix_json(g.H);
  j["pi"] = matrix_json(g.pi);
  j["below_rate_floor"] = g.below_rate_floor;
  return j.dump(indent) + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GroundTruth g;
    g.phi_bar = j.at("phi_bar").get<double>();
    g.nu_bar = j.at("nu_bar").get<double>();
    g.phi = vector_from(j.at("phi"));
    g.nu = vector_from(j.at("nu"));
    g.lambda_bar = vector_from(j.at("lambda_bar"));
    g.eta = matrix_from(j.at("eta"));
    g.psi = matrix_from(j.at("psi"));
    g.H = matrix_from(j.at("H"));
    g.pi = matrix_from(j.at("pi"));
    g.below_rate_floor = j.at("below_rate_floor").get<std::vector<bool>>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("ground truth JSON: ") + e.what());
  }
}

// ---- diagnostics ----------------------------------------------------------

double gelman_rubin(const std::vector<Eigen::VectorXd>& chains) {
  const auto m = static_cast<double>(chains.size());
  if (chains.size() < 2) throw std::invalid_argument("gelman_rubin needs at least two chains");
  const Eigen::Index len = chains.front().size();
  if (len < 2) throw std::invalid_argument("gelman_rubin needs at least two draws per chain");
  Eigen::VectorXd means(chains.size());
  double W = 0.0;
  for (std::size_t k = 0; k < chains.size(); ++k) {
    if (chains[k].size() != len) throw std::invalid_argument("gelman_rubin needs equal-length chains");
    means(k) = chains[k].mean();
    W += (chains[k].array() - means(k)).square().sum() / static_cast<double>(len - 1);
  }
  W /= m;
  const double n = static_cast<double>(len);
  const double B = n * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (W <= 0.0) return B <= 0.0 ? 1.0 : INFINITY;
  const double V = (n - 1.0) / n * W + B / n;
  return std::sqrt(V / W);
}

Eigen::VectorXd reproducibility_deviation(const std::vector<PosteriorDraws>& runs) {
  if (runs.size() < 2) throw std::invalid_argument("reproducibility needs at least two runs");
  const Eigen::VectorXd ref = runs.front().phi.colwise().mean().transpose();
  Eigen::VectorXd dev = Eigen::VectorXd::Zero(ref.size());
  for (std::size_t j = 1; j < runs.size(); ++j) {
    const Eigen::VectorXd mj = runs[j].phi.colwise().mean().transpose();
    if (mj.size() != ref.size()) throw std::invalid_argument("reproducibility runs differ in metro count");
    dev = dev.cwiseMax((mj - ref).cwiseAbs());
  }
  return dev;
}

}  // namespace hcount
