#pragma once

#include "cfacar/config.hpp"
#include "cfacar/dataset.hpp"
#include "cfacar/network.hpp"
#include "cfacar/types.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace cfacar {

// Cholesky with a single jitter retry (1e-8 * mean diagonal) before failing.
Eigen::LLT<Matrixd> chol_with_jitter(Matrixd a, const char* what);

// Diagonal of the spike-and-slab covariance for one indicator column:
// slab_var * [theta_j + v0 * (1 - theta_j)].
template <class Derived>
Vector<double> spike_slab_variances(const Eigen::MatrixBase<Derived>& theta_col,
                                    double slab_var, double v0) {
  Vectord d(theta_col.size());
  for (Index j = 0; j < theta_col.size(); ++j)
    d[j] = slab_var * (theta_col[j] != 0 ? 1.0 : v0);
  return d;
}

// Correlation induced by (I - gamma*W)^{-1}: unit diagonal by construction,
// positive definite for every coupling value inside the support. Solved via
// Cholesky of (I - gamma*W); a failed factorization means the coupling is
// outside the admissible interval.
template <class Derived>
Matrix<typename Derived::Scalar> correlation_from_gamma(
    const Eigen::MatrixBase<Derived>& w, typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  using Mat = Matrix<Scalar>;
  const Index q = w.rows();
  Mat f = Mat::Identity(q, q) - gamma * w;
  Eigen::LLT<Mat> llt(f);
  if (llt.info() != Eigen::Success)
    throw Error("coupling value outside the admissible support (I - gamma*W not PD)");
  Mat g = llt.solve(Mat::Identity(q, q));
  Vector<Scalar> dinv = g.diagonal().array().sqrt().inverse();
  Mat r = dinv.asDiagonal() * g * dinv.asDiagonal();
  // pin the invariants exactly
  r = ((r + r.transpose()) / Scalar(2)).eval();
  r.diagonal().setOnes();
  return r;
}

// One Gibbs-chain snapshot. Loadings respect the structural-zero mask;
// indicator entries of control experiments stay fixed at zero.
struct ModelState {
  Matrixd loadings;           // p x q
  Matrixd factors;            // q x N
  Matrixd shifts;             // q x N perturbation effects
  Eigen::MatrixXi indicators; // q x E
  double coupling = 0.0;      // gamma
  Vectord gene_var;           // p
  double factor_var = 1.0;    // sigma2
  double slab_var = 1.0;      // tau2

  Matrixd corr;        // cached R(gamma)
  Matrixd factor_cov;  // cached Phi = s2 * R(gamma)

  Index n_genes() const { return loadings.rows(); }
  Index n_pathways() const { return loadings.cols(); }
  Index n_columns() const { return factors.cols(); }

  void set_coupling(const Matrixd& w, double gamma, double s2);
};

// Paper-default initial point: loadings from their prior on free entries,
// everything else at the prior center.
ModelState initial_state(const ExpressionDataset& data, const PathwayNetwork& net,
                         const LoadingMask& mask, const Hyperparameters& hyper,
                         class Rng& rng);

// Marginal covariance of one factor column given its experiment indicators:
// V(theta) = sigma2 * Phi + Phi * Sigma(theta) * Phi.
Matrixd marginal_factor_cov(const ModelState& s, const Eigen::VectorXi& theta_col,
                            const Hyperparameters& hyper);

// Marginal covariance of an observation column with factors and shifts
// integrated out: Lambda V(theta) Lambda^T + Psi.
Matrixd marginal_cov_y(const ModelState& s, const Eigen::VectorXi& theta_col,
                       const Hyperparameters& hyper);

// Coupling log-likelihood: -(N/2) log|Phi| - 1/2 sum_i (w_i - Phi r_i)' (sigma2 Phi)^{-1} (...)
// Flat coupling prior, so differences of this are the whole Metropolis log-ratio.
double coupling_log_likelihood(const Matrixd& factor_cov, const Matrixd& factors,
                               const Matrixd& shifts, double factor_var);
double log_likelihood_factors(const ModelState& s);

// Log density of Y with factors integrated out (mean Lambda*Phi*shift,
// covariance Psi + sigma2 * Lambda Phi Lambda^T), summed over columns.
double log_marginal_y_given_shifts(const ModelState& s, const Matrixd& y);

// Negates loading columns, factor rows and shift rows for a block of
// pathways. Valid blocks are unions of connected components of W; the
// observable distribution of Y is invariant under such flips.
void sign_flip(ModelState& s, const std::vector<Index>& block, const Matrixd& w);

}  // namespace cfacar
