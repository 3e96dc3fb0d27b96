#include "cfacar/model.hpp"

#include "cfacar/rng.hpp"

#include <cmath>
#include <set>

namespace cfacar {

Eigen::LLT<Matrixd> chol_with_jitter(Matrixd a, const char* what) {
  Eigen::LLT<Matrixd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-8 * a.diagonal().mean();
  a.diagonal().array() += jitter;
  llt.compute(a);
  if (llt.info() == Eigen::Success) return llt;
  throw Error(std::string(what) + ": matrix not positive definite even after jitter");
}

void ModelState::set_coupling(const Matrixd& w, double gamma, double s2) {
  coupling = gamma;
  corr = correlation_from_gamma(w, gamma);
  factor_cov = s2 * corr;
}

ModelState initial_state(const ExpressionDataset& data, const PathwayNetwork& net,
                         const LoadingMask& mask, const Hyperparameters& hyper, Rng& rng) {
  const Index p = data.n_genes();
  const Index n = data.n_samples();
  const Index q = net.size();
  if (mask.n_genes() != p || mask.n_pathways() != q)
    throw Error("mask shape does not match data/network");

  ModelState s;
  s.loadings.setZero(p, q);
  const double sd = std::sqrt(hyper.lambda_prior_var);
  for (Index k = 0; k < p; ++k)
    for (Index j : mask.row_members[static_cast<std::size_t>(k)])
      s.loadings(k, j) = sd * rng.normal();
  s.factors.setZero(q, n);
  s.shifts.setZero(q, n);
  s.indicators.setZero(q, data.layout.n_experiments());
  s.gene_var.setOnes(p);
  s.factor_var = 1.0;
  s.slab_var = 1.0;
  s.set_coupling(net.weights, 0.0, hyper.s2);
  return s;
}

Matrixd marginal_factor_cov(const ModelState& s, const Eigen::VectorXi& theta_col,
                            const Hyperparameters& hyper) {
  const Vectord sig = spike_slab_variances(theta_col, s.slab_var, hyper.v0);
  Matrixd v = s.factor_var * s.factor_cov;
  v.noalias() += s.factor_cov * sig.asDiagonal() * s.factor_cov;
  return v;
}

Matrixd marginal_cov_y(const ModelState& s, const Eigen::VectorXi& theta_col,
                       const Hyperparameters& hyper) {
  const Matrixd v = marginal_factor_cov(s, theta_col, hyper);
  Matrixd cov = s.loadings * v * s.loadings.transpose();
  cov.diagonal() += s.gene_var;
  return cov;
}

double coupling_log_likelihood(const Matrixd& factor_cov, const Matrixd& factors,
                               const Matrixd& shifts, double factor_var) {
  const Index n = factors.cols();
  const Eigen::LLT<Matrixd> llt = chol_with_jitter(factor_cov, "factor covariance");
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  Matrixd resid = factors - factor_cov * shifts;
  const double quad = (resid.array() * llt.solve(resid).array()).sum();
  const double ll = -0.5 * static_cast<double>(n) * logdet - 0.5 * quad / factor_var;
  if (!std::isfinite(ll)) throw Error("non-finite factor log-likelihood");
  return ll;
}

double log_likelihood_factors(const ModelState& s) {
  return coupling_log_likelihood(s.factor_cov, s.factors, s.shifts, s.factor_var);
}

double log_marginal_y_given_shifts(const ModelState& s, const Matrixd& y) {
  const Index p = s.n_genes();
  const Index n = s.n_columns();
  Matrixd cov = s.factor_var * (s.loadings * s.factor_cov * s.loadings.transpose());
  cov.diagonal() += s.gene_var;
  const Eigen::LLT<Matrixd> llt = chol_with_jitter(std::move(cov), "marginal Y covariance");
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  Matrixd resid = y - s.loadings * (s.factor_cov * s.shifts);
  const double quad = (resid.array() * llt.solve(resid).array()).sum();
  constexpr double log2pi = 1.8378770664093454836;
  return -0.5 * (static_cast<double>(n) * (static_cast<double>(p) * log2pi + logdet) + quad);
}

void sign_flip(ModelState& s, const std::vector<Index>& block, const Matrixd& w) {
  const auto comp = connected_components(w);
  std::set<Index> members(block.begin(), block.end());
  std::set<int> labels;
  for (Index j : block) {
    if (j < 0 || j >= s.n_pathways()) throw Error("sign_flip: pathway index out of range");
    labels.insert(comp[static_cast<std::size_t>(j)]);
  }
  for (std::size_t j = 0; j < comp.size(); ++j)
    if (labels.count(comp[j]) && !members.count(static_cast<Index>(j)))
      throw Error("sign_flip: block is not closed under network components");

  for (Index j : block) {
    s.loadings.col(j) = -s.loadings.col(j);
    s.factors.row(j) = -s.factors.row(j);
    s.shifts.row(j) = -s.shifts.row(j);
  }
}

}  // namespace cfacar
