// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_GIBBS_HPP
#define HCOUNT_GIBBS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "hcount/data_model.hpp"
#include "hcount/ffbs.hpp"
#include "hcount/priors.hpp"
#include "hcount/random.hpp"

namespace hcount {

using MatrixXl = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// How the total homeless count H is updated.
enum class HUpdateMode {
  kBetaBinomial,  // accuracy integrated out: C | H ~ BetaBinomial(H, a, b)
  kPiDraw,        // draw pi | H, C ~ Beta(a + C, b + H - C), then H | pi
};

struct GibbsConfig {
  int burn_in = 15000;
  int n_samples = 25000;
  int n_chains = 1;
  std::uint64_t seed = 1;
  int thinning = 1;
  double tail_threshold = 1e-8;
  HUpdateMode h_mode = HUpdateMode::kBetaBinomial;
  int threads = 1;

  void validate() const;
  int retained_per_chain() const { return n_samples / thinning; }
};

/// Observed data and fixed prior quantities consumed by the sampler.
struct ModelData {
  MatrixXl C;               // metros x T
  MatrixXl N;               // metros x T
  Eigen::MatrixXd dzri;     // metros x T
  std::vector<MetroPrior> priors;
  PriorSpec spec;

  int n_metros() const { return static_cast<int>(C.rows()); }
  int T() const { return static_cast<int>(C.cols()); }
  const BetaParams& accuracy(int i, int t) const { return priors[i].accuracy.years[t].beta; }
};

ModelData make_model_data(const Panel& panel, std::vector<MetroPrior> priors, const PriorSpec& spec);

/// Latent state of one sweep. Matrices are metros x T.
struct ChainState {
  MatrixXl Z;
  MatrixXl H;
  Eigen::MatrixXd omega;
  Eigen::MatrixXd zeta;
  Eigen::MatrixXd eta;
  Eigen::MatrixXd psi;
  Eigen::VectorXd nu;
  Eigen::VectorXd phi;
  double nu_bar = 0.0;
  double phi_bar = 0.0;
};

/// Retained draws of one chain. Per-(metro, year) parameters are stored as
/// n_draws x (metros * T) matrices with column i * T + t.
struct PosteriorDraws {
  int n_metros = 0;
  int T = 0;
  int chain = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string prior_hash;

  Eigen::MatrixXd eta;
  Eigen::MatrixXd psi;
  Eigen::MatrixXd H;
  Eigen::MatrixXd nu;   // n_draws x metros
  Eigen::MatrixXd phi;  // n_draws x metros
  Eigen::VectorXd nu_bar;
  Eigen::VectorXd phi_bar;

  Eigen::Index n_draws() const { return phi.rows(); }
  static Eigen::Index col(int metro, int t, int T) { return static_cast<Eigen::Index>(metro) * T + t; }
  Eigen::Index col(int metro, int t) const { return col(metro, t, T); }
};

/// Stacks chains draw-wise (chain 0 first).
PosteriorDraws combine(const std::vector<PosteriorDraws>& chains);

struct GaussianConditional {
  double mean = 0.0;
  double variance = 0.0;
};

// Step 1: Z = N + Poisson((1 - theta) lambda_bar).
std::int64_t sample_Z(std::int64_t N, double lambda_bar, double theta, Rng& rng);

/// eta_{1:T} | Z, omega, nu_i by FFBS.
Eigen::VectorXd sample_eta(const Eigen::Ref<const Eigen::VectorXd>& N, const Eigen::Ref<const Eigen::VectorXd>& Z,
                           const Eigen::Ref<const Eigen::VectorXd>& omega, double nu_i, const EtaSetup& eta0,
                           double sigma2_eta, Rng& rng);

/// psi_{1:T} | H, zeta, phi_i by FFBS.
Eigen::VectorXd sample_psi(const Eigen::Ref<const Eigen::VectorXd>& N, const Eigen::Ref<const Eigen::VectorXd>& H,
                           const Eigen::Ref<const Eigen::VectorXd>& zeta,
                           const Eigen::Ref<const Eigen::VectorXd>& dzri, double phi_i, const GaussianPrior& psi0,
                           double sigma2_psi, Rng& rng);

/// Full conditional of the metro drift nu_i given its eta path.
GaussianConditional nu_i_conditional(const Eigen::Ref<const Eigen::VectorXd>& eta, double nu_bar,
                                     const EtaSetup& eta0, double sigma2_eta, double sigma2_nu_i);
double sample_nu_i(const Eigen::Ref<const Eigen::VectorXd>& eta, double nu_bar, const EtaSetup& eta0,
                   double sigma2_eta, double sigma2_nu_i, Rng& rng);

GaussianConditional nu_bar_conditional(const Eigen::Ref<const Eigen::VectorXd>& nu, double sigma2_nu_i,
                                       double sigma2_nu_bar);
double sample_nu_bar(const Eigen::Ref<const Eigen::VectorXd>& nu, double sigma2_nu_i, double sigma2_nu_bar,
                     Rng& rng);

/// Untruncated Gaussian kernel of phi_i | psi, phi_bar; draws are truncated at 0.
GaussianConditional phi_i_conditional(const Eigen::Ref<const Eigen::VectorXd>& psi,
                                      const Eigen::Ref<const Eigen::VectorXd>& dzri, double phi_bar,
                                      const GaussianPrior& psi0, double sigma2_psi, double sigma2_phi_i);
double sample_phi_i(const Eigen::Ref<const Eigen::VectorXd>& psi, const Eigen::Ref<const Eigen::VectorXd>& dzri,
                    double phi_bar, const GaussianPrior& psi0, double sigma2_psi, double sigma2_phi_i, Rng& rng);

GaussianConditional phi_bar_conditional(const Eigen::Ref<const Eigen::VectorXd>& phi, double sigma2_phi_i,
                                        double m_phi_bar, double sigma2_phi_bar);
double sample_phi_bar(const Eigen::Ref<const Eigen::VectorXd>& phi, double sigma2_phi_i, double m_phi_bar,
                      double sigma2_phi_bar, Rng& rng);

/// Draws H on [C, N] from Binomial(H; N, p) * BetaBinomial(C; H, a, b) using
/// the ratio recurrence p(H+1)/p(H). The scan stops once past the mode and
/// the unnormalized mass falls below tail_threshold times the modal mass.
std::int64_t sample_H(std::int64_t N, std::int64_t C, double p, const BetaParams& accuracy, double tail_threshold,
                      Rng& rng);
/// Same support and truncation, with accuracy fixed at pi.
std::int64_t sample_H_given_pi(std::int64_t N, std::int64_t C, double p, double pi, double tail_threshold,
                               Rng& rng);

ChainState initial_state(const ModelData& data);

/// Runs burn-in plus n_samples sweeps of the ten-step sampler and keeps every
/// thinning-th post-burn-in draw.
PosteriorDraws run_chain(const ModelData& data, const GibbsConfig& config, int chain_index);

/// Runs config.n_chains chains on up to config.threads threads.
std::vector<PosteriorDraws> run_chains(const ModelData& data, const GibbsConfig& config);

}  // namespace hcount

#endif  // HCOUNT_GIBBS_HPP
