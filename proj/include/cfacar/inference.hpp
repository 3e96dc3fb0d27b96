#pragma once

#include "cfacar/config.hpp"
#include "cfacar/dataset.hpp"
#include "cfacar/model.hpp"
#include "cfacar/trace.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfacar {

// Standard normal quantile function (Acklam's rational approximation,
// refined by one Halley step; good to ~1e-15).
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Centroid selection under BFDR control
// ---------------------------------------------------------------------------

// Elementwise threshold theta_hat = I(P > t); monotone in t.
Eigen::MatrixXi centroid_select(const Matrixd& theta_post, double t);

// Bayesian false discovery rate of a selection; 0 for an empty selection.
double bfdr(const Matrixd& theta_post, const Eigen::MatrixXi& selection);

struct ThresholdResult {
  double t = 1.0;
  double bfdr = 0.0;
  bool feasible = false;  // false -> no non-empty controlled selection exists
};

// Smallest threshold among {0} and the observed posterior values whose
// selection is non-empty and controlled at `level`.
ThresholdResult threshold_for_bfdr(const Matrixd& theta_post, double level);

// ---------------------------------------------------------------------------
// Convergence
// ---------------------------------------------------------------------------

struct RhatEntry {
  double rhat = 1.0;
  bool degenerate = false;  // zero within-chain variance
};

// Classic between/within-chain potential scale reduction from per-chain
// streaming moments (computed on |parameter| series by the caller).
std::vector<RhatEntry> gelman_rubin(const std::vector<const RunningMoments*>& chains);

// Scalar convenience overload for series data (used by the diagnostics tests).
RhatEntry gelman_rubin_scalar(const std::vector<std::vector<double>>& chains);

// ---------------------------------------------------------------------------
// Combined posterior summary
// ---------------------------------------------------------------------------

struct PosteriorSummary {
  Matrixd theta_post;  // q x E inclusion means (controls exactly 0)
  Matrixd snr;         // q x E
  Matrixd lambda_mean;
  Vectord psi_mean;
  Matrixd corr_mean;
  double gamma_mean = 0.0, sigma2_mean = 0.0, tau2_mean = 0.0;

  std::vector<RhatEntry> rhat;  // per parameter, ParamLayout order
  Vectord param_mean;           // raw posterior means
  Vectord param_sd;
  double max_rhat = 1.0;
  Index n_rhat_above(double level) const;
  bool converged(double level = 1.1) const { return max_rhat <= level; }

  // quantiles of the scalar blocks, from stored draws
  std::map<std::string, std::array<double, 5>> scalar_quantiles;  // 2.5/25/50/75/97.5%
};

PosteriorSummary summarize_chains(const std::vector<ChainTrace>& traces,
                                  const ParamLayout& layout);

// ---------------------------------------------------------------------------
// Model fit assessment (standardized residuals)
// ---------------------------------------------------------------------------

struct ModelFitResult {
  double pooled_mean = 0.0;
  double pooled_var = 0.0;
  double pooled_bound = 0.0;  // 3/sqrt(n*p): |pooled_mean| above this flags misfit
  bool zero_mean_ok = true;
  Vectord gene_avg;           // per-gene standardized expression averaged over samples
  Matrixd standardized;       // p x N
};

// Whitens each column by the Cholesky factor of the plug-in marginal
// covariance Lambda V(theta) Lambda' + Psi built per experiment.
ModelFitResult model_fit_standardize(const ExpressionDataset& data, const Matrixd& lambda,
                                     const Matrixd& factor_cov, const Matrixd& theta_post,
                                     const Vectord& psi, double sigma2, double tau2,
                                     const Hyperparameters& hyper);

ModelFitResult model_fit_standardize(const ExpressionDataset& data,
                                     const PosteriorSummary& summary,
                                     const Hyperparameters& hyper);

// QQ data: sorted values against standard normal quantiles at (i-0.5)/n.
void write_qq_csv(const fs::path& path, const Vectord& values);

// ---------------------------------------------------------------------------
// Leave-one-out control validation
// ---------------------------------------------------------------------------

struct LooFold {
  std::string held_out_sample;
  Vectord theta_post;   // posterior inclusion for the held-out pseudo-case
  double threshold = 1.0;
  Index n_selected = 0;
};

struct LooResult {
  std::vector<LooFold> folds;
  Index folds_with_selections() const;
};

// Refits once per control sample with that sample recast as a singleton case
// experiment; reports its posterior inclusions against the pooled BFDR
// threshold of each fold's fit.
LooResult loo_control_validation(const ExpressionDataset& data, const PathwayNetwork& net,
                                 const GeneSetCollection& catalog,
                                 const Hyperparameters& hyper, const SamplerConfig& config,
                                 double bfdr_level, int jobs);

}  // namespace cfacar
