#include "cfacar/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace cfacar {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double chol_logdet(const Eigen::LLT<Matrixd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

Vectord draw_gaussian(const GaussianMoments& m, Rng& rng) {
  const Eigen::LLT<Matrixd> llt = chol_with_jitter(m.precision, "conditional precision");
  Vectord x = llt.solve(m.linear);
  Vectord z = rng.normal_vector(m.linear.size());
  x += llt.matrixU().solve(z);
  return x;
}

GaussianMoments loading_conditional(const ModelState& s, const Matrixd& y,
                                    const LoadingMask& mask, Index k,
                                    const Hyperparameters& hyper, double temp) {
  const auto& rows = mask.row_members[static_cast<std::size_t>(k)];
  const Index r = static_cast<Index>(rows.size());
  const double noise = temp * s.gene_var[k];

  Matrixd sub(r, s.n_columns());
  for (Index a = 0; a < r; ++a) sub.row(a) = s.factors.row(rows[static_cast<std::size_t>(a)]);

  GaussianMoments m;
  m.precision.noalias() = sub * sub.transpose() / noise;
  m.precision.diagonal().array() += 1.0 / hyper.lambda_prior_var;
  m.linear.noalias() = sub * y.row(k).transpose() / noise;
  return m;
}

void GibbsSampler::sample_loadings(ModelState& s, Rng& rng, double temp) const {
  for (Index k = 0; k < s.n_genes(); ++k) {
    const auto& rows = mask_.row_members[static_cast<std::size_t>(k)];
    const GaussianMoments m = loading_conditional(s, data_.values, mask_, k, hyper_, temp);
    const Vectord draw = draw_gaussian(m, rng);
    for (std::size_t a = 0; a < rows.size(); ++a)
      s.loadings(k, rows[a]) = draw[static_cast<Index>(a)];
  }
}

ShiftContext make_shift_context(const ModelState& s, const Matrixd& y,
                                const Hyperparameters& hyper, double temp) {
  const Index q = s.n_pathways();
  const double sigma2 = temp * s.factor_var;
  const Vectord psi_inv = (temp * s.gene_var.array()).inverse();

  const Matrixd lt_psi = s.loadings.transpose() * psi_inv.asDiagonal();
  Matrixd m(q, q);
  m.noalias() = lt_psi * s.loadings;
  Matrixd u(q, y.cols());
  u.noalias() = lt_psi * y;

  // Woodbury: Lambda'(sigma2 L Phi L' + Psi)^{-1} = (I - M C^{-1}) Lambda' Psi^{-1}
  // with C = (sigma2 Phi)^{-1} + M
  const Eigen::LLT<Matrixd> phi_llt = chol_with_jitter(s.factor_cov, "factor covariance");
  Matrixd c = phi_llt.solve(Matrixd::Identity(q, q)) / sigma2;
  c.noalias() += m;
  const Eigen::LLT<Matrixd> c_llt = chol_with_jitter(std::move(c), "Woodbury core");

  ShiftContext ctx;
  Matrixd smat = m - m * c_llt.solve(m);
  ctx.kernel = s.factor_cov * smat * s.factor_cov;
  ctx.kernel = 0.5 * (ctx.kernel + ctx.kernel.transpose()).eval();
  ctx.linear = s.factor_cov * (u - m * c_llt.solve(u));
  return ctx;
}

GaussianMoments shift_conditional(const ShiftContext& ctx, const ModelState& s,
                                  const Eigen::VectorXi& theta_col,
                                  const Hyperparameters& hyper, Index col) {
  GaussianMoments m;
  m.precision = ctx.kernel;
  m.precision.diagonal() +=
      spike_slab_variances(theta_col, s.slab_var, hyper.v0).cwiseInverse();
  m.linear = ctx.linear.col(col);
  return m;
}

void GibbsSampler::sample_shifts(ModelState& s, Rng& rng, double temp) const {
  const ShiftContext ctx = make_shift_context(s, data_.values, hyper_, temp);
  for (Index i = 0; i < s.n_columns(); ++i) {
    const Index e = data_.layout.column_experiment[static_cast<std::size_t>(i)];
    const GaussianMoments m = shift_conditional(ctx, s, s.indicators.col(e), hyper_, i);
    s.shifts.col(i) = draw_gaussian(m, rng);
  }
}

double indicator_logit(const Matrixd& vinv, const Vectord& phi_col, int theta_cur,
                       double tau_gap, double alpha, const Matrixd& factors,
                       const std::vector<Index>& cols) {
  const Vectord v = vinv * phi_col;
  const double s = phi_col.dot(v);
  const double m = static_cast<double>(cols.size());
  const double delta = theta_cur == 0 ? 1.0 + tau_gap * s : 1.0 - tau_gap * s;
  if (!(delta > 0.0))
    throw Error("indicator step: rank-1 determinant factor not positive");
  double quad = 0.0;
  for (Index c : cols) {
    const double t = v.dot(factors.col(c));
    quad += t * t;
  }
  const double sign = theta_cur == 0 ? -1.0 : 1.0;
  return sign * 0.5 * m * std::log(delta) + 0.5 * (tau_gap / delta) * quad + logit(alpha);
}

void IndicatorCache::apply_flip(Matrixd& vinv, double& logdet, const Vectord& phi_col,
                                int theta_cur, double tau_gap) {
  const Vectord v = vinv * phi_col;
  const double s = phi_col.dot(v);
  if (theta_cur == 0) {
    // spike -> slab: V gains tau_gap * phi phi'
    const double delta = 1.0 + tau_gap * s;
    vinv.noalias() -= (tau_gap / delta) * (v * v.transpose());
    logdet += std::log(delta);
  } else {
    // slab -> spike: V loses tau_gap * phi phi'
    const double delta = 1.0 - tau_gap * s;
    if (!(delta > 0.0))
      throw Error("indicator cache downdate lost positive definiteness");
    vinv.noalias() += (tau_gap / delta) * (v * v.transpose());
    logdet += std::log(delta);
  }
}

void IndicatorCache::rebuild(const ModelState& s, const ExperimentLayout& layout,
                             const Hyperparameters& hyper) {
  const Index ne = layout.n_experiments();
  vinv_.assign(static_cast<std::size_t>(ne), Matrixd());
  logdet_.assign(static_cast<std::size_t>(ne), 0.0);
  case_exps_.clear();
  for (Index e = 0; e < ne; ++e) {
    if (layout.experiments[static_cast<std::size_t>(e)].is_control) continue;
    case_exps_.push_back(e);
    const Matrixd v = marginal_factor_cov(s, s.indicators.col(e), hyper);
    const Eigen::LLT<Matrixd> llt = chol_with_jitter(v, "marginal factor covariance");
    vinv_[static_cast<std::size_t>(e)] =
        llt.solve(Matrixd::Identity(v.rows(), v.cols()));
    logdet_[static_cast<std::size_t>(e)] = chol_logdet(llt);
  }
}

void IndicatorCache::scan(ModelState& s, const ExperimentLayout& layout,
                          const Hyperparameters& hyper, Rng& rng) {
  const double tau_gap = s.slab_var * (1.0 - hyper.v0);
  for (Index e : case_exps_) {
    Matrixd& vinv = vinv_[static_cast<std::size_t>(e)];
    double& logdet = logdet_[static_cast<std::size_t>(e)];
    const auto& cols = layout.experiments[static_cast<std::size_t>(e)].columns;
    for (Index j = 0; j < s.n_pathways(); ++j) {
      const int cur = s.indicators(j, e);
      const double lo =
          indicator_logit(vinv, s.factor_cov.col(j), cur, tau_gap, hyper.alpha, s.factors, cols);
      const int next = rng.uniform() < sigmoid(lo) ? 1 : 0;
      if (next != cur) {
        apply_flip(vinv, logdet, s.factor_cov.col(j), cur, tau_gap);
        s.indicators(j, e) = next;
      }
    }
  }
}

double IndicatorCache::audit(const ModelState& s, const ExperimentLayout& layout,
                             const Hyperparameters& hyper) const {
  double drift = 0.0;
  for (Index e : case_exps_) {
    const Matrixd v = marginal_factor_cov(s, s.indicators.col(e), hyper);
    const Eigen::LLT<Matrixd> llt = chol_with_jitter(v, "marginal factor covariance");
    const Matrixd dense = llt.solve(Matrixd::Identity(v.rows(), v.cols()));
    const double dense_logdet = chol_logdet(llt);
    const Matrixd& cached = vinv_[static_cast<std::size_t>(e)];
    const double rel =
        (cached - dense).cwiseAbs().maxCoeff() / std::max(1e-300, dense.cwiseAbs().maxCoeff());
    const double rel_ld = std::abs(logdet_[static_cast<std::size_t>(e)] - dense_logdet) /
                          std::max(1.0, std::abs(dense_logdet));
    drift = std::max({drift, rel, rel_ld});
  }
  return drift;
}

const Matrixd& IndicatorCache::vinv(Index experiment) const {
  return vinv_[static_cast<std::size_t>(experiment)];
}

double IndicatorCache::logdet(Index experiment) const {
  return logdet_[static_cast<std::size_t>(experiment)];
}

void MetropolisTuner::update(double accept_prob) {
  ++step_;
  log_sd_ += (accept_prob - target_) / (1.0 + static_cast<double>(step_) / gain_scale_);
  log_sd_ = std::clamp(log_sd_, std::log(1e-8), std::log(10.0));
}

InverseGammaParams gene_var_conditional(const Matrixd& resid, Index k, double zeta,
                                        Index n_columns, double temp) {
  InverseGammaParams p;
  p.shape = zeta + static_cast<double>(n_columns) / (2.0 * temp);
  p.rate = zeta - 1.0 + resid.row(k).squaredNorm() / (2.0 * temp);
  return p;
}

InverseGammaParams factor_var_conditional(const ModelState& s, const Hyperparameters& hyper) {
  const Index n = s.n_columns();
  const Index q = s.n_pathways();
  const Eigen::LLT<Matrixd> llt = chol_with_jitter(s.factor_cov, "factor covariance");
  Matrixd resid = s.factors - s.factor_cov * s.shifts;
  const double quad = (resid.array() * llt.solve(resid).array()).sum();
  return {hyper.ig_shape + static_cast<double>(q * n) / 2.0, hyper.ig_rate + 0.5 * quad};
}

InverseGammaParams slab_var_conditional(const ModelState& s, const ExperimentLayout& layout,
                                        const Hyperparameters& hyper) {
  const Index n = s.n_columns();
  const Index q = s.n_pathways();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Index e = layout.column_experiment[static_cast<std::size_t>(i)];
    for (Index j = 0; j < q; ++j) {
      const double v = s.indicators(j, e) ? 1.0 : hyper.v0;
      acc += s.shifts(j, i) * s.shifts(j, i) / (2.0 * v);
    }
  }
  return {hyper.ig_shape + static_cast<double>(q * n) / 2.0, hyper.ig_rate + acc};
}

GibbsSampler::GibbsSampler(const ExpressionDataset& data, const PathwayNetwork& net,
                           const LoadingMask& mask, const Hyperparameters& hyper,
                           const SamplerConfig& config)
    : data_(data),
      net_(net),
      mask_(mask),
      hyper_(hyper),
      config_(config),
      support_(gamma_support(net, hyper.delta_gamma)),
      params_(ParamLayout::make(mask, data.n_samples())),
      tuner_(config.metropolis_sd, config.adapt_target_accept, config.adapt_window) {
  hyper_.validate(data.n_samples());
  config_.validate();
  if (mask.n_genes() != data.n_genes()) throw Error("mask/data gene mismatch");
  if (mask.n_pathways() != net.size()) throw Error("mask/network pathway mismatch");
  if (data.layout.n_case_experiments() == 0)
    throw Error("no case experiments: nothing to infer");
}

void GibbsSampler::sample_indicators(ModelState& s, Rng& rng) {
  cache_.rebuild(s, data_.layout, hyper_);
  cache_.scan(s, data_.layout, hyper_, rng);
  if (config_.audit_interval > 0 && sweeps_done_ % config_.audit_interval == 0) {
    const double drift = cache_.audit(s, data_.layout, hyper_);
    std::ostringstream msg;
    msg << "sweep " << sweeps_done_ << ": indicator cache drift " << drift;
    if (drift > 1e-6) {
      cache_.rebuild(s, data_.layout, hyper_);
      msg << " (exceeds 1e-6, rebuilt)";
    }
    audit_log_.push_back(msg.str());
  }
}

void GibbsSampler::sample_coupling(ModelState& s, Rng& rng, bool adapt) {
  if (support_.degenerate) return;
  ++proposals_;
  const double cand = s.coupling + tuner_.sd() * rng.normal();
  double accept_prob = 0.0;
  if (support_.contains(cand)) {
    const Matrixd cand_corr = correlation_from_gamma(net_.weights, cand);
    const Matrixd cand_cov = hyper_.s2 * cand_corr;
    const double cur = coupling_log_likelihood(s.factor_cov, s.factors, s.shifts, s.factor_var);
    const double prop = coupling_log_likelihood(cand_cov, s.factors, s.shifts, s.factor_var);
    accept_prob = std::min(1.0, std::exp(prop - cur));
    if (rng.uniform() < accept_prob) {
      s.coupling = cand;
      s.corr = cand_corr;
      s.factor_cov = cand_cov;
      ++accepts_;
    }
  } else {
    // zero prior mass outside the support
    rng.uniform();
  }
  if (adapt) tuner_.update(accept_prob);
}

void GibbsSampler::sample_factors(ModelState& s, Rng& rng, double temp) const {
  const Index q = s.n_pathways();
  const Vectord psi_inv = (temp * s.gene_var.array()).inverse();
  const Matrixd lt_psi = s.loadings.transpose() * psi_inv.asDiagonal();

  const Eigen::LLT<Matrixd> phi_llt = chol_with_jitter(s.factor_cov, "factor covariance");
  Matrixd a = phi_llt.solve(Matrixd::Identity(q, q)) / s.factor_var;
  a.noalias() += lt_psi * s.loadings;
  const Eigen::LLT<Matrixd> a_llt = chol_with_jitter(std::move(a), "factor conditional");

  Matrixd rhs(q, s.n_columns());
  rhs.noalias() = lt_psi * data_.values;
  rhs += s.shifts / s.factor_var;

  Matrixd z(q, s.n_columns());
  rng.fill_normal(z);
  s.factors = a_llt.solve(rhs);
  s.factors += a_llt.matrixU().solve(z);
}

void GibbsSampler::sample_variances(ModelState& s, Rng& rng, double temp) const {
  const Index n = s.n_columns();
  const double zeta = hyper_.zeta(n);

  Matrixd resid = data_.values;
  resid.noalias() -= s.loadings * s.factors;
  for (Index k = 0; k < s.n_genes(); ++k) {
    const InverseGammaParams p = gene_var_conditional(resid, k, zeta, n, temp);
    s.gene_var[k] = rng.inv_gamma(p.shape, p.rate);
  }

  const InverseGammaParams ps = factor_var_conditional(s, hyper_);
  s.factor_var = rng.inv_gamma(ps.shape, ps.rate);

  const InverseGammaParams pt = slab_var_conditional(s, data_.layout, hyper_);
  s.slab_var = rng.inv_gamma(pt.shape, pt.rate);
}

void GibbsSampler::check_finite(const ModelState& s, long long sweep_index) const {
  const bool ok = s.loadings.allFinite() && s.factors.allFinite() && s.shifts.allFinite() &&
                  s.gene_var.allFinite() && std::isfinite(s.factor_var) &&
                  std::isfinite(s.slab_var) && std::isfinite(s.coupling) && s.factor_var > 0.0 &&
                  s.slab_var > 0.0;
  if (!ok) {
    std::ostringstream msg;
    msg << "chain diverged at sweep " << sweep_index << ": non-finite state"
        << " (sigma2=" << s.factor_var << ", tau2=" << s.slab_var << ", gamma=" << s.coupling
        << ")";
    throw Error(msg.str());
  }
}

void GibbsSampler::sweep(ModelState& s, Rng& rng, double temp, bool adapt) {
  ++sweeps_done_;
  sample_loadings(s, rng, temp);
  sample_shifts(s, rng, temp);
  sample_indicators(s, rng);
  sample_coupling(s, rng, adapt);
  sample_factors(s, rng, temp);
  sample_variances(s, rng, temp);
  check_finite(s, sweeps_done_);
}

ChainTrace run_chain(const ExpressionDataset& data, const PathwayNetwork& net,
                     const LoadingMask& mask, const Hyperparameters& hyper,
                     const SamplerConfig& config, int chain_id) {
  GibbsSampler sampler(data, net, mask, hyper, config);
  Rng rng = Rng(config.seed).substream(static_cast<std::uint64_t>(chain_id));
  ModelState state = initial_state(data, net, mask, hyper, rng);

  ChainTrace trace;
  trace.chain_id = chain_id;
  trace.seed = rng.seed();
  trace.init(sampler.params(), data.layout.n_experiments(), config.store_scalar_draws);

  // hot rungs of the tempering ladder; the trailing 1.0 entry is where the
  // proper schedule begins
  const int per_rung = config.temper_sweeps_per_rung();
  for (std::size_t r = 0; r + 1 < config.temper_schedule.size(); ++r)
    for (int it = 0; it < per_rung; ++it)
      sampler.sweep(state, rng, config.temper_schedule[r], true);

  for (int it = 0; it < config.iterations; ++it) {
    const bool adapt = it < config.burn_in;
    sampler.sweep(state, rng, 1.0, adapt);
    if (it >= config.burn_in && (it - config.burn_in) % config.thin == 0)
      trace.absorb(state, data.layout, hyper, sampler.params());
  }

  trace.gamma_proposals = sampler.coupling_proposals();
  trace.gamma_accepts = sampler.coupling_accepts();
  trace.xi_final = sampler.tuner().sd();
  trace.audit_log = sampler.audit_log();
  return trace;
}

std::vector<ChainTrace> run_chains(const ExpressionDataset& data, const PathwayNetwork& net,
                                   const LoadingMask& mask, const Hyperparameters& hyper,
                                   const SamplerConfig& config, int jobs) {
  const int n = config.chains;
  std::vector<ChainTrace> traces(static_cast<std::size_t>(n));
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, n));

  if (jobs == 1) {
    for (int c = 0; c < n; ++c)
      traces[static_cast<std::size_t>(c)] = run_chain(data, net, mask, hyper, config, c);
    return traces;
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  std::atomic<int> next{0};
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int c = next.fetch_add(1); c < n; c = next.fetch_add(1))
          traces[static_cast<std::size_t>(c)] = run_chain(data, net, mask, hyper, config, c);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return traces;
}

}  // namespace cfacar
