#pragma once

#include "cfacar/config.hpp"
#include "cfacar/dataset.hpp"
#include "cfacar/model.hpp"
#include "cfacar/rng.hpp"
#include "cfacar/trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cfacar {

// Gaussian conditional in natural form: N(A^{-1} a, A^{-1}).
struct GaussianMoments {
  Matrixd precision;  // A
  Vectord linear;     // a
};

// mean + U^{-1} z with A = U'U; one Cholesky serves both mean and noise.
Vectord draw_gaussian(const GaussianMoments& m, Rng& rng);

// ---------------------------------------------------------------------------
// Step moments. Each sampler move factors into a testable moment computation
// and a generic Gaussian / inverse-gamma draw. `temp` flattens the
// Y-likelihood contribution during tempered initialization (1 = exact).
// ---------------------------------------------------------------------------

// Conditional for the free entries of loading row k (Lindley-Smith form).
GaussianMoments loading_conditional(const ModelState& s, const Matrixd& y,
                                    const LoadingMask& mask, Index k,
                                    const Hyperparameters& hyper, double temp = 1.0);

// Per-sweep shared kernel of the collapsed shift step: the p-dimensional
// solve (sigma2*L*Phi*L' + Psi)^{-1} reduced to q-dimensional factorizations.
struct ShiftContext {
  Matrixd kernel;  // Phi Lambda' (sigma2 L Phi L' + Psi)^{-1} Lambda Phi
  Matrixd linear;  // column i: Phi Lambda' (sigma2 L Phi L' + Psi)^{-1} y_i
};

ShiftContext make_shift_context(const ModelState& s, const Matrixd& y,
                                const Hyperparameters& hyper, double temp = 1.0);

// Collapsed conditional of one shift column given its experiment indicators.
GaussianMoments shift_conditional(const ShiftContext& ctx, const ModelState& s,
                                  const Eigen::VectorXi& theta_col,
                                  const Hyperparameters& hyper, Index col);

// logit P(theta_j -> 1) for one pathway of one experiment, evaluated from the
// cached inverse marginal factor covariance. Quadratic forms accumulate over
// the experiment's replicate columns; the log-determinant term appears once
// per replicate.
double indicator_logit(const Matrixd& vinv, const Vectord& phi_col, int theta_cur,
                       double tau_gap, double alpha, const Matrixd& factors,
                       const std::vector<Index>& cols);

// V(theta)^{-1} and log|V(theta)| per case experiment, maintained by
// Sherman-Morrison / determinant-lemma rank-1 updates within an indicator
// scan and rebuilt densely whenever Phi, sigma2 or tau2 move.
class IndicatorCache {
 public:
  void rebuild(const ModelState& s, const ExperimentLayout& layout,
               const Hyperparameters& hyper);

  // Gibbs scan over pathways of every case experiment.
  void scan(ModelState& s, const ExperimentLayout& layout, const Hyperparameters& hyper,
            Rng& rng);

  // Max relative deviation between cached values and dense recomputation.
  double audit(const ModelState& s, const ExperimentLayout& layout,
               const Hyperparameters& hyper) const;

  const Matrixd& vinv(Index experiment) const;
  double logdet(Index experiment) const;
  const std::vector<Index>& case_experiments() const { return case_exps_; }

  // Single rank-1 move, exposed for the cache stress checks.
  static void apply_flip(Matrixd& vinv, double& logdet, const Vectord& phi_col,
                         int theta_cur, double tau_gap);

 private:
  std::vector<Matrixd> vinv_;
  std::vector<double> logdet_;
  std::vector<Index> case_exps_;
};

// Random-walk proposal width with Robbins-Monro adaptation toward a target
// acceptance rate; frozen once burn-in ends.
class MetropolisTuner {
 public:
  MetropolisTuner(double initial_sd, double target, double gain_scale)
      : log_sd_(std::log(initial_sd)), target_(target), gain_scale_(gain_scale) {}

  double sd() const { return std::exp(log_sd_); }
  void update(double accept_prob);

 private:
  double log_sd_;
  double target_;
  double gain_scale_;
  long long step_ = 0;
};

struct InverseGammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

InverseGammaParams gene_var_conditional(const Matrixd& resid_row_sq_sums, Index k, double zeta,
                                        Index n_columns, double temp);
InverseGammaParams factor_var_conditional(const ModelState& s, const Hyperparameters& hyper);
InverseGammaParams slab_var_conditional(const ModelState& s, const ExperimentLayout& layout,
                                        const Hyperparameters& hyper);

// ---------------------------------------------------------------------------
// Full sweeps and chain driver
// ---------------------------------------------------------------------------

struct ChainDiagnostics {
  std::vector<std::string> audit_log;
};

class GibbsSampler {
 public:
  GibbsSampler(const ExpressionDataset& data, const PathwayNetwork& net,
               const LoadingMask& mask, const Hyperparameters& hyper,
               const SamplerConfig& config);

  // One full update in the order: loadings, shifts (collapsed), indicators
  // (collapsed), coupling, factors, gene variances, factor variance, slab
  // variance.
  void sweep(ModelState& s, Rng& rng, double temp, bool adapt);

  const GammaSupport& support() const { return support_; }
  const ParamLayout& params() const { return params_; }

  void sample_loadings(ModelState& s, Rng& rng, double temp) const;
  void sample_shifts(ModelState& s, Rng& rng, double temp) const;
  void sample_indicators(ModelState& s, Rng& rng) ;
  void sample_coupling(ModelState& s, Rng& rng, bool adapt);
  void sample_factors(ModelState& s, Rng& rng, double temp) const;
  void sample_variances(ModelState& s, Rng& rng, double temp) const;

  const IndicatorCache& indicator_cache() const { return cache_; }
  MetropolisTuner& tuner() { return tuner_; }
  int coupling_proposals() const { return proposals_; }
  int coupling_accepts() const { return accepts_; }
  const std::vector<std::string>& audit_log() const { return audit_log_; }
  long long sweeps_done() const { return sweeps_done_; }

 private:
  void check_finite(const ModelState& s, long long sweep_index) const;

  const ExpressionDataset& data_;
  const PathwayNetwork& net_;
  const LoadingMask& mask_;
  Hyperparameters hyper_;
  SamplerConfig config_;
  GammaSupport support_;
  ParamLayout params_;

  IndicatorCache cache_;
  MetropolisTuner tuner_;
  int proposals_ = 0;
  int accepts_ = 0;
  long long sweeps_done_ = 0;
  std::vector<std::string> audit_log_;
};

// Convenience wrapper: construct the sampler and run one chain.
ChainTrace run_chain(const ExpressionDataset& data, const PathwayNetwork& net,
                     const LoadingMask& mask, const Hyperparameters& hyper,
                     const SamplerConfig& config, int chain_id);

// All chains, optionally in parallel (jobs <= 0 picks a sensible default).
std::vector<ChainTrace> run_chains(const ExpressionDataset& data, const PathwayNetwork& net,
                                   const LoadingMask& mask, const Hyperparameters& hyper,
                                   const SamplerConfig& config, int jobs);

}  // namespace cfacar
