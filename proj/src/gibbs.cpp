// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hcount/polya_gamma.hpp"

namespace hcount {

void GibbsConfig::validate() const {
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (n_chains < 1) throw ValidationError("n_chains must be >= 1");
  if (thinning < 1) throw ValidationError("thinning must be >= 1");
  if (n_samples < thinning) throw ValidationError("n_samples must be at least thinning");
  if (!(tail_threshold > 0.0 && tail_threshold < 1.0)) throw ValidationError("tail_threshold must lie in (0, 1)");
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

ModelData make_model_data(const Panel& panel, std::vector<MetroPrior> priors, const PriorSpec& spec) {
  panel.validate();
  if (priors.size() != panel.metros.size()) throw ValidationError("one prior per metro required");
  ModelData d;
  const int n = panel.n_metros();
  const int T = panel.T();
  d.C.resize(n, T);
  d.N.resize(n, T);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(priors[i].accuracy.years.size()) != T)
      throw ValidationError("accuracy prior for metro " + panel.metros[i].metro_id + " has wrong length");
    for (int t = 0; t < T; ++t) {
      d.C(i, t) = panel.metros[i].count[t + 1];
      d.N(i, t) = panel.metros[i].population[t + 1];
      if (d.N(i, t) < 1)
        throw ValidationError("metro " + panel.metros[i].metro_id + ": population must be positive");
    }
  }
  d.dzri = panel.delta_zri();
  d.priors = std::move(priors);
  d.spec = spec;
  return d;
}

PosteriorDraws combine(const std::vector<PosteriorDraws>& chains) {
  if (chains.empty()) return {};
  PosteriorDraws out = chains.front();
  Eigen::Index total = 0;
  for (const auto& c : chains) total += c.n_draws();
  auto stack = [&](auto member) {
    const auto& first = chains.front().*member;
    std::remove_cvref_t<decltype(first)> m(total, first.cols());
    Eigen::Index row = 0;
    for (const auto& c : chains) {
      m.middleRows(row, c.n_draws()) = c.*member;
      row += c.n_draws();
    }
    out.*member = std::move(m);
  };
  stack(&PosteriorDraws::eta);
  stack(&PosteriorDraws::psi);
  stack(&PosteriorDraws::H);
  stack(&PosteriorDraws::nu);
  stack(&PosteriorDraws::phi);
  stack(&PosteriorDraws::nu_bar);
  stack(&PosteriorDraws::phi_bar);
  return out;
}

// ---------------------------------------------------------------------------
// Individual full conditionals

std::int64_t sample_Z(std::int64_t N, double lambda_bar, double theta, Rng& rng) {
  return N + poisson(rng, (1.0 - theta) * lambda_bar);
}

Eigen::VectorXd sample_eta(const Eigen::Ref<const Eigen::VectorXd>& N, const Eigen::Ref<const Eigen::VectorXd>& Z,
                           const Eigen::Ref<const Eigen::VectorXd>& omega, double nu_i, const EtaSetup& eta0,
                           double sigma2_eta, Rng& rng) {
  FfbsProblem<double> p;
  p.m0 = eta0.mean_eta0;
  p.S0 = eta0.var_eta0;
  p.omega = omega;
  p.kappa = N - 0.5 * Z;
  p.drift = Eigen::VectorXd::Constant(N.size(), nu_i);
  p.sigma2 = sigma2_eta;
  return ffbs(p, rng);
}

Eigen::VectorXd sample_psi(const Eigen::Ref<const Eigen::VectorXd>& N, const Eigen::Ref<const Eigen::VectorXd>& H,
                           const Eigen::Ref<const Eigen::VectorXd>& zeta,
                           const Eigen::Ref<const Eigen::VectorXd>& dzri, double phi_i, const GaussianPrior& psi0,
                           double sigma2_psi, Rng& rng) {
  FfbsProblem<double> p;
  p.m0 = psi0.mean;
  p.S0 = psi0.variance;
  p.omega = zeta;
  p.kappa = H - 0.5 * N;
  p.drift = phi_i * dzri;
  p.sigma2 = sigma2_psi;
  return ffbs(p, rng);
}

GaussianConditional nu_i_conditional(const Eigen::Ref<const Eigen::VectorXd>& eta, double nu_bar,
                                     const EtaSetup& eta0, double sigma2_eta, double sigma2_nu_i) {
  const Eigen::Index T = eta.size();
  const double first_var = eta0.var_eta0 + sigma2_eta;
  const double precision = 1.0 / first_var + static_cast<double>(T - 1) / sigma2_eta + 1.0 / sigma2_nu_i;
  double weighted = (eta(0) - eta0.mean_eta0) / first_var + nu_bar / sigma2_nu_i;
  if (T > 1) weighted += (eta.tail(T - 1) - eta.head(T - 1)).sum() / sigma2_eta;
  const double var = 1.0 / precision;
  return {var * weighted, var};
}

double sample_nu_i(const Eigen::Ref<const Eigen::VectorXd>& eta, double nu_bar, const EtaSetup& eta0,
                   double sigma2_eta, double sigma2_nu_i, Rng& rng) {
  const auto g = nu_i_conditional(eta, nu_bar, eta0, sigma2_eta, sigma2_nu_i);
  return normal(rng, g.mean, std::sqrt(g.variance));
}

GaussianConditional nu_bar_conditional(const Eigen::Ref<const Eigen::VectorXd>& nu, double sigma2_nu_i,
                                       double sigma2_nu_bar) {
  const double var = 1.0 / (static_cast<double>(nu.size()) / sigma2_nu_i + 1.0 / sigma2_nu_bar);
  return {var * nu.sum() / sigma2_nu_i, var};
}

double sample_nu_bar(const Eigen::Ref<const Eigen::VectorXd>& nu, double sigma2_nu_i, double sigma2_nu_bar,
                     Rng& rng) {
  const auto g = nu_bar_conditional(nu, sigma2_nu_i, sigma2_nu_bar);
  return normal(rng, g.mean, std::sqrt(g.variance));
}

GaussianConditional phi_i_conditional(const Eigen::Ref<const Eigen::VectorXd>& psi,
                                      const Eigen::Ref<const Eigen::VectorXd>& dzri, double phi_bar,
                                      const GaussianPrior& psi0, double sigma2_psi, double sigma2_phi_i) {
  const Eigen::Index T = psi.size();
  // psi_0 is integrated out, so the first increment carries its variance too
  const double first_var = psi0.variance + sigma2_psi;
  double precision = dzri(0) * dzri(0) / first_var + 1.0 / sigma2_phi_i;
  double weighted = phi_bar / sigma2_phi_i + dzri(0) * (psi(0) - psi0.mean) / first_var;
  if (T > 1) {
    const auto dz = dzri.tail(T - 1);
    precision += dz.squaredNorm() / sigma2_psi;
    weighted += dz.dot(psi.tail(T - 1) - psi.head(T - 1)) / sigma2_psi;
  }
  const double var = 1.0 / precision;
  return {var * weighted, var};
}

double sample_phi_i(const Eigen::Ref<const Eigen::VectorXd>& psi, const Eigen::Ref<const Eigen::VectorXd>& dzri,
                    double phi_bar, const GaussianPrior& psi0, double sigma2_psi, double sigma2_phi_i, Rng& rng) {
  const auto g = phi_i_conditional(psi, dzri, phi_bar, psi0, sigma2_psi, sigma2_phi_i);
  return truncated_normal_below(rng, g.mean, std::sqrt(g.variance), 0.0);
}

GaussianConditional phi_bar_conditional(const Eigen::Ref<const Eigen::VectorXd>& phi, double sigma2_phi_i,
                                        double m_phi_bar, double sigma2_phi_bar) {
  const double var = 1.0 / (static_cast<double>(phi.size()) / sigma2_phi_i + 1.0 / sigma2_phi_bar);
  return {var * (phi.sum() / sigma2_phi_i + m_phi_bar / sigma2_phi_bar), var};
}

double sample_phi_bar(const Eigen::Ref<const Eigen::VectorXd>& phi, double sigma2_phi_i, double m_phi_bar,
                      double sigma2_phi_bar, Rng& rng) {
  const auto g = phi_bar_conditional(phi, sigma2_phi_i, m_phi_bar, sigma2_phi_bar);
  return truncated_normal_below(rng, g.mean, std::sqrt(g.variance), 0.0);
}

// ---------------------------------------------------------------------------
// Step 10

namespace {

constexpr double kRescaleAbove = 1e250;

// Scans H = C, C+1, ... accumulating unnormalized weights w(H) with
// w(C) = 1 and w(H+1) = w(H) r(H), then inverts the CDF.
template <typename Ratio>
std::int64_t scan_and_draw(std::int64_t N, std::int64_t C, double tail_threshold, Ratio&& ratio, Rng& rng) {
  if (C > N) throw std::invalid_argument("sample_H: count exceeds population");
  if (C == N) return N;

  thread_local std::vector<double> w;
  w.clear();
  w.push_back(1.0);
  double wmax = 1.0;
  double total = 1.0;
  double current = 1.0;
  for (std::int64_t h = C; h < N; ++h) {
    const double r = ratio(h);
    current *= r;
    if (current > kRescaleAbove) {
      for (double& x : w) x /= kRescaleAbove;
      total /= kRescaleAbove;
      wmax /= kRescaleAbove;
      current /= kRescaleAbove;
    }
    w.push_back(current);
    total += current;
    if (current > wmax) wmax = current;
    if (r < 1.0 && current < tail_threshold * wmax) break;
  }

  const double target = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (acc >= target) return C + static_cast<std::int64_t>(k);
  }
  return C + static_cast<std::int64_t>(w.size()) - 1;
}

}  // namespace

std::int64_t sample_H(std::int64_t N, std::int64_t C, double p, const BetaParams& accuracy, double tail_threshold,
                      Rng& rng) {
  if (accuracy.perfect()) {
    if (C > N) throw std::invalid_argument("sample_H: count exceeds population");
    return C;
  }
  const double odds = p / (1.0 - p);
  const double a = accuracy.a;
  const double b = accuracy.b;
  const double n = static_cast<double>(N);
  const double c = static_cast<double>(C);
  return scan_and_draw(
      N, C, tail_threshold,
      [&](std::int64_t hi) {
        const double h = static_cast<double>(hi);
        return (n - h) / (h + 1.0 - c) * ((h - c + b) / (h + a + b)) * odds;
      },
      rng);
}

std::int64_t sample_H_given_pi(std::int64_t N, std::int64_t C, double p, double pi, double tail_threshold,
                               Rng& rng) {
  const double factor = (1.0 - pi) * p / (1.0 - p);
  const double n = static_cast<double>(N);
  const double c = static_cast<double>(C);
  return scan_and_draw(
      N, C, tail_threshold,
      [&](std::int64_t hi) {
        const double h = static_cast<double>(hi);
        return (n - h) / (h + 1.0 - c) * factor;
      },
      rng);
}

// ---------------------------------------------------------------------------
// Sweeps

ChainState initial_state(const ModelData& d) {
  const int n = d.n_metros();
  const int T = d.T();
  const auto& spec = d.spec;
  ChainState s;
  s.nu = Eigen::VectorXd::Zero(n);
  s.phi = Eigen::VectorXd::Constant(n, spec.m_phi_bar);
  s.nu_bar = 0.0;
  s.phi_bar = spec.m_phi_bar;
  s.eta.resize(n, T);
  s.psi.resize(n, T);
  s.H.resize(n, T);
  s.Z.resize(n, T);
  s.omega.resize(n, T);
  s.zeta.resize(n, T);
  for (int i = 0; i < n; ++i) {
    const auto& prior = d.priors[i];
    double psi = prior.psi0.mean;
    for (int t = 0; t < T; ++t) {
      psi += spec.m_phi_bar * d.dzri(i, t);
      s.psi(i, t) = psi;
      s.eta(i, t) = prior.eta.mean_eta0;
      const double inflated = std::round(d.accuracy(i, t).mean_reciprocal() * static_cast<double>(d.C(i, t)));
      s.H(i, t) = std::clamp(static_cast<std::int64_t>(std::min(inflated, 9.0e18)), d.C(i, t), d.N(i, t));
      const double theta = logistic(s.eta(i, t));
      s.Z(i, t) = d.N(i, t) + static_cast<std::int64_t>(std::llround((1.0 - theta) * prior.eta.lambda_bar));
      s.omega(i, t) = pg_mean(static_cast<double>(s.Z(i, t)), s.eta(i, t));
      s.zeta(i, t) = pg_mean(static_cast<double>(d.N(i, t)), s.psi(i, t));
    }
  }
  return s;
}

namespace {

[[noreturn]] void breach(int sweep, const std::string& what) {
  throw std::runtime_error("sweep " + std::to_string(sweep) + ": " + what);
}

void check_state(const ModelData& d, const ChainState& s, int sweep) {
  for (int i = 0; i < d.n_metros(); ++i) {
    if (!(s.phi(i) > 0.0)) breach(sweep, "phi_" + std::to_string(i) + " is not positive");
    if (!std::isfinite(s.nu(i))) breach(sweep, "nu_" + std::to_string(i) + " is not finite");
    for (int t = 0; t < d.T(); ++t) {
      if (s.H(i, t) < d.C(i, t) || s.H(i, t) > d.N(i, t))
        breach(sweep, "H outside [C, N] at metro " + std::to_string(i) + " t " + std::to_string(t + 1));
      if (s.Z(i, t) < d.N(i, t)) breach(sweep, "Z below N at metro " + std::to_string(i));
      if (!std::isfinite(s.eta(i, t)) || !std::isfinite(s.psi(i, t)))
        breach(sweep, "nonfinite latent path at metro " + std::to_string(i));
    }
  }
  if (!(s.phi_bar > 0.0)) breach(sweep, "phi_bar is not positive");
  if (!std::isfinite(s.nu_bar)) breach(sweep, "nu_bar is not finite");
}

void sweep_once(const ModelData& d, const GibbsConfig& cfg, int chain, int sweep, ChainState& s) {
  const int n = d.n_metros();
  const int T = d.T();
  const auto& spec = d.spec;
  const std::uint64_t seed = cfg.seed;
  const auto sw = static_cast<std::uint64_t>(sweep);
  auto stream = [&](int unit, Stream step) { return make_stream(seed, chain, unit, step, sw); };

  const Eigen::MatrixXd N = d.N.cast<double>();

  for (int i = 0; i < n; ++i) {
    const auto& prior = d.priors[i];
    {  // Step 1
      Rng rng = stream(i, Stream::kZ);
      for (int t = 0; t < T; ++t) s.Z(i, t) = sample_Z(d.N(i, t), prior.eta.lambda_bar, logistic(s.eta(i, t)), rng);
    }
    {  // Step 2
      Rng rng = stream(i, Stream::kEta);
      const Eigen::VectorXd Z = s.Z.row(i).cast<double>().transpose();
      s.eta.row(i) = sample_eta(N.row(i).transpose(), Z, s.omega.row(i).transpose(), s.nu(i), prior.eta,
                                spec.sigma2_eta, rng)
                         .transpose();
    }
    {  // Step 3
      Rng rng = stream(i, Stream::kOmega);
      for (int t = 0; t < T; ++t) s.omega(i, t) = sample_pg({s.Z(i, t), s.eta(i, t)}, rng);
    }
    {  // Step 4
      Rng rng = stream(i, Stream::kNu);
      s.nu(i) = sample_nu_i(s.eta.row(i).transpose(), s.nu_bar, prior.eta, spec.sigma2_eta, spec.sigma2_nu_i, rng);
    }
  }
  {  // Step 5
    Rng rng = stream(0, Stream::kNuBar);
    s.nu_bar = sample_nu_bar(s.nu, spec.sigma2_nu_i, spec.sigma2_nu_bar, rng);
  }
  for (int i = 0; i < n; ++i) {
    const auto& prior = d.priors[i];
    {  // Step 6
      Rng rng = stream(i, Stream::kPsi);
      const Eigen::VectorXd H = s.H.row(i).cast<double>().transpose();
      s.psi.row(i) = sample_psi(N.row(i).transpose(), H, s.zeta.row(i).transpose(), d.dzri.row(i).transpose(),
                                s.phi(i), prior.psi0, spec.sigma2_psi, rng)
                         .transpose();
    }
    {  // Step 7
      Rng rng = stream(i, Stream::kZeta);
      for (int t = 0; t < T; ++t) s.zeta(i, t) = sample_pg({d.N(i, t), s.psi(i, t)}, rng);
    }
    {  // Step 8
      Rng rng = stream(i, Stream::kPhi);
      s.phi(i) = sample_phi_i(s.psi.row(i).transpose(), d.dzri.row(i).transpose(), s.phi_bar, prior.psi0,
                              spec.sigma2_psi, spec.sigma2_phi_i, rng);
    }
  }
  {  // Step 9
    Rng rng = stream(0, Stream::kPhiBar);
    s.phi_bar = sample_phi_bar(s.phi, spec.sigma2_phi_i, spec.m_phi_bar, spec.sigma2_phi_bar, rng);
  }
  for (int i = 0; i < n; ++i) {  // Step 10
    Rng rng = stream(i, Stream::kH);
    for (int t = 0; t < T; ++t) {
      const double p = logistic(s.psi(i, t));
      const auto& acc = d.accuracy(i, t);
      if (cfg.h_mode == HUpdateMode::kBetaBinomial) {
        s.H(i, t) = sample_H(d.N(i, t), d.C(i, t), p, acc, cfg.tail_threshold, rng);
      } else {
        const double pi = acc.perfect()
                              ? 1.0
                              : beta(rng, acc.a + static_cast<double>(d.C(i, t)),
                                     acc.b + static_cast<double>(s.H(i, t) - d.C(i, t)));
        s.H(i, t) = sample_H_given_pi(d.N(i, t), d.C(i, t), p, pi, cfg.tail_threshold, rng);
      }
    }
  }
  check_state(d, s, sweep);
}

}  // namespace

PosteriorDraws run_chain(const ModelData& d, const GibbsConfig& cfg, int chain_index) {
  cfg.validate();
  d.spec.validate();
  const int n = d.n_metros();
  const int T = d.T();
  const int keep = cfg.retained_per_chain();

  PosteriorDraws out;
  out.n_metros = n;
  out.T = T;
  out.chain = chain_index;
  out.seed = cfg.seed;
  out.eta.resize(keep, n * T);
  out.psi.resize(keep, n * T);
  out.H.resize(keep, n * T);
  out.nu.resize(keep, n);
  out.phi.resize(keep, n);
  out.nu_bar.resize(keep);
  out.phi_bar.resize(keep);

  ChainState s = initial_state(d);
  const int total = cfg.burn_in + keep * cfg.thinning;
  int row = 0;
  for (int sweep = 1; sweep <= total; ++sweep) {
    sweep_once(d, cfg, chain_index, sweep, s);
    const int post = sweep - cfg.burn_in;
    if (post <= 0 || post % cfg.thinning != 0) continue;
    // row-major flattening matches PosteriorDraws::col(i, t) = i * T + t
    for (int i = 0; i < n; ++i) {
      out.eta.row(row).segment(i * T, T) = s.eta.row(i);
      out.psi.row(row).segment(i * T, T) = s.psi.row(i);
      out.H.row(row).segment(i * T, T) = s.H.row(i).cast<double>();
    }
    out.nu.row(row) = s.nu.transpose();
    out.phi.row(row) = s.phi.transpose();
    out.nu_bar(row) = s.nu_bar;
    out.phi_bar(row) = s.phi_bar;
    ++row;
  }
  return out;
}

std::vector<PosteriorDraws> run_chains(const ModelData& d, const GibbsConfig& cfg) {
  cfg.validate();
  std::vector<PosteriorDraws> out(cfg.n_chains);
  if (cfg.threads <= 1 || cfg.n_chains == 1) {
    for (int c = 0; c < cfg.n_chains; ++c) out[c] = run_chain(d, cfg, c);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int c = next++; c < cfg.n_chains; c = next++) {
      try {
        out[c] = run_chain(d, cfg, c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::min(cfg.threads, cfg.n_chains); ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace hcount
