#include "cfacar/inference.hpp"

#include "cfacar/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

namespace cfacar {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile needs p in (0,1)");
  // Acklam's approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double u = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else if (p <= 1.0 - plow) {
    const double u = p - 0.5;
    const double r = u * u;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double u = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  // one Halley refinement against the exact CDF
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x -= u / (1.0 + x * u / 2.0);
  return x;
}

Eigen::MatrixXi centroid_select(const Matrixd& theta_post, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error("selection threshold must lie in [0,1]");
  return (theta_post.array() > t).cast<int>();
}

double bfdr(const Matrixd& theta_post, const Eigen::MatrixXi& selection) {
  if (theta_post.rows() != selection.rows() || theta_post.cols() != selection.cols())
    throw Error("bfdr: shape mismatch");
  double num = 0.0;
  long long count = 0;
  for (Index j = 0; j < theta_post.cols(); ++j)
    for (Index i = 0; i < theta_post.rows(); ++i)
      if (selection(i, j)) {
        num += 1.0 - theta_post(i, j);
        ++count;
      }
  // empty selection: no discoveries, vacuously zero false ones
  return count == 0 ? 0.0 : num / static_cast<double>(count);
}

ThresholdResult threshold_for_bfdr(const Matrixd& theta_post, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error("bfdr level must lie in (0,1)");
  std::set<double> candidates{0.0};
  for (Index j = 0; j < theta_post.cols(); ++j)
    for (Index i = 0; i < theta_post.rows(); ++i) candidates.insert(theta_post(i, j));

  for (double t : candidates) {
    const Eigen::MatrixXi sel = centroid_select(theta_post, t);
    if (sel.sum() == 0) continue;
    const double rate = bfdr(theta_post, sel);
    if (rate <= level) return {t, rate, true};
  }
  return {1.0, 0.0, false};
}

std::vector<RhatEntry> gelman_rubin(const std::vector<const RunningMoments*>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw Error("gelman_rubin needs at least two chains");
  const long long n = chains[0]->n;
  const Index np = chains[0]->mean.size();
  for (const auto* c : chains)
    if (c->n != n || c->mean.size() != np)
      throw Error("gelman_rubin: chains must have equal retained lengths");
  if (n < 2) throw Error("gelman_rubin: need at least two retained draws");

  std::vector<RhatEntry> out(static_cast<std::size_t>(np));
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  for (Index i = 0; i < np; ++i) {
    double grand = 0.0;
    for (const auto* c : chains) grand += c->mean[i];
    grand /= dm;
    double w = 0.0, b_over_n = 0.0;
    for (const auto* c : chains) {
      w += c->m2[i] / (dn - 1.0);
      const double d = c->mean[i] - grand;
      b_over_n += d * d;
    }
    w /= dm;
    b_over_n /= (dm - 1.0);
    if (w <= 0.0) {
      out[static_cast<std::size_t>(i)] = {1.0, true};
      continue;
    }
    const double vhat = (dn - 1.0) / dn * w + (1.0 + 1.0 / dm) * b_over_n;
    out[static_cast<std::size_t>(i)] = {std::sqrt(vhat / w), false};
  }
  return out;
}

RhatEntry gelman_rubin_scalar(const std::vector<std::vector<double>>& chains) {
  std::vector<RunningMoments> moments(chains.size());
  std::vector<const RunningMoments*> ptrs;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    moments[c].init(1);
    Vectord v(1);
    for (double x : chains[c]) {
      v[0] = x;
      moments[c].add(v);
    }
    ptrs.push_back(&moments[c]);
  }
  return gelman_rubin(ptrs)[0];
}

Index PosteriorSummary::n_rhat_above(double level) const {
  Index n = 0;
  for (const auto& r : rhat)
    if (r.rhat > level) ++n;
  return n;
}

namespace {

std::array<double, 5> quantiles_of(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  const auto at = [&](double q) {
    const double pos = q * (static_cast<double>(draws.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, draws.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return draws[lo] * (1.0 - frac) + draws[hi] * frac;
  };
  return {at(0.025), at(0.25), at(0.5), at(0.75), at(0.975)};
}

}  // namespace

PosteriorSummary summarize_chains(const std::vector<ChainTrace>& traces,
                                  const ParamLayout& layout) {
  if (traces.empty()) throw Error("no chains to summarize");
  const double m = static_cast<double>(traces.size());

  PosteriorSummary s;
  s.theta_post = traces[0].theta_mean;
  s.snr = traces[0].snr_mean;
  s.lambda_mean = traces[0].lambda_mean;
  s.psi_mean = traces[0].psi_mean;
  s.corr_mean = traces[0].corr_mean;
  s.gamma_mean = traces[0].gamma_mean;
  s.sigma2_mean = traces[0].sigma2_mean;
  s.tau2_mean = traces[0].tau2_mean;
  for (std::size_t c = 1; c < traces.size(); ++c) {
    if (traces[c].retained != traces[0].retained)
      throw Error("chains have different retained lengths");
    s.theta_post += traces[c].theta_mean;
    s.snr += traces[c].snr_mean;
    s.lambda_mean += traces[c].lambda_mean;
    s.psi_mean += traces[c].psi_mean;
    s.corr_mean += traces[c].corr_mean;
    s.gamma_mean += traces[c].gamma_mean;
    s.sigma2_mean += traces[c].sigma2_mean;
    s.tau2_mean += traces[c].tau2_mean;
  }
  s.theta_post /= m;
  s.snr /= m;
  s.lambda_mean /= m;
  s.psi_mean /= m;
  s.corr_mean /= m;
  s.gamma_mean /= m;
  s.sigma2_mean /= m;
  s.tau2_mean /= m;

  // posterior mean/sd pooled over chains (law of total variance)
  s.param_mean.setZero(layout.size());
  for (const auto& t : traces) s.param_mean += t.raw_moments.mean;
  s.param_mean /= m;
  Vectord within = Vectord::Zero(layout.size());
  Vectord between = Vectord::Zero(layout.size());
  for (const auto& t : traces) {
    within += t.raw_moments.variance();
    between.array() += (t.raw_moments.mean - s.param_mean).array().square();
  }
  s.param_sd = (within / m + between / m).cwiseSqrt();

  if (traces.size() >= 2) {
    std::vector<const RunningMoments*> abs_chains;
    for (const auto& t : traces) abs_chains.push_back(&t.abs_moments);
    s.rhat = gelman_rubin(abs_chains);
    s.max_rhat = 1.0;
    for (const auto& r : s.rhat) s.max_rhat = std::max(s.max_rhat, r.rhat);
  }

  if (!traces[0].gamma_draws.empty()) {
    std::vector<double> g, sg, tu;
    for (const auto& t : traces) {
      g.insert(g.end(), t.gamma_draws.begin(), t.gamma_draws.end());
      sg.insert(sg.end(), t.sigma2_draws.begin(), t.sigma2_draws.end());
      tu.insert(tu.end(), t.tau2_draws.begin(), t.tau2_draws.end());
    }
    s.scalar_quantiles["gamma"] = quantiles_of(std::move(g));
    s.scalar_quantiles["sigma2"] = quantiles_of(std::move(sg));
    s.scalar_quantiles["tau2"] = quantiles_of(std::move(tu));
  }
  return s;
}

ModelFitResult model_fit_standardize(const ExpressionDataset& data, const Matrixd& lambda,
                                     const Matrixd& factor_cov, const Matrixd& theta_post,
                                     const Vectord& psi, double sigma2, double tau2,
                                     const Hyperparameters& hyper) {
  const Index p = data.n_genes();
  const Index n = data.n_samples();

  ModelFitResult out;
  out.standardized.resize(p, n);
  for (Index e = 0; e < data.layout.n_experiments(); ++e) {
    // plug-in spike-slab diagonal from the posterior inclusion means
    Vectord sig(theta_post.rows());
    for (Index j = 0; j < theta_post.rows(); ++j)
      sig[j] = tau2 * (theta_post(j, e) + hyper.v0 * (1.0 - theta_post(j, e)));
    Matrixd v = sigma2 * factor_cov;
    v.noalias() += factor_cov * sig.asDiagonal() * factor_cov;
    Matrixd cov = lambda * v * lambda.transpose();
    cov.diagonal() += psi;
    const Eigen::LLT<Matrixd> llt = chol_with_jitter(std::move(cov), "plug-in marginal covariance");
    for (Index c : data.layout.experiments[static_cast<std::size_t>(e)].columns)
      out.standardized.col(c) =
          llt.matrixL().solve(data.values.col(c));
  }

  const double np = static_cast<double>(p) * static_cast<double>(n);
  out.pooled_mean = out.standardized.mean();
  out.pooled_var = (out.standardized.array() - out.pooled_mean).square().sum() / (np - 1.0);
  out.pooled_bound = 3.0 / std::sqrt(np);
  out.zero_mean_ok = std::abs(out.pooled_mean) < out.pooled_bound;
  out.gene_avg = out.standardized.rowwise().mean();
  return out;
}

ModelFitResult model_fit_standardize(const ExpressionDataset& data,
                                     const PosteriorSummary& summary,
                                     const Hyperparameters& hyper) {
  return model_fit_standardize(data, summary.lambda_mean, hyper.s2 * summary.corr_mean,
                               summary.theta_post, summary.psi_mean, summary.sigma2_mean,
                               summary.tau2_mean, hyper);
}

void write_qq_csv(const fs::path& path, const Vectord& values) {
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::ostringstream out;
  out << "theoretical,empirical\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double u = (static_cast<double>(i) + 0.5) / n;
    out << format_double(normal_quantile(u)) << ',' << format_double(sorted[i]) << '\n';
  }
  write_text_file(path, out.str());
}

LooResult loo_control_validation(const ExpressionDataset& data, const PathwayNetwork& net,
                                 const GeneSetCollection& catalog,
                                 const Hyperparameters& hyper, const SamplerConfig& config,
                                 double bfdr_level, int jobs) {
  std::vector<std::size_t> control_cols;
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    if (data.samples[i].is_control) control_cols.push_back(i);
  if (control_cols.size() < 2)
    throw Error("leave-one-out validation needs at least two control samples");

  LooResult result;
  result.folds.resize(control_cols.size());

  const auto run_fold = [&](std::size_t f) {
    const std::size_t col = control_cols[f];
    std::vector<SampleInfo> samples = data.samples;
    samples[col].is_control = false;
    samples[col].experiment_id = "loo:" + samples[col].sample_id;
    samples[col].replicate_index = 0;

    // re-center on the remaining controls; the held-out mock is now a case
    const ExpressionDataset fold_data = with_samples(data, std::move(samples));
    const MaskedInputs inputs = build_mask(fold_data, catalog, net.pathway_ids);

    SamplerConfig fold_config = config;
    fold_config.seed = Rng(config.seed).substream(1000 + f).seed();
    const auto traces =
        run_chains(inputs.data, net, inputs.mask, hyper, fold_config, 1);
    const ParamLayout layout = ParamLayout::make(inputs.mask, inputs.data.n_samples());
    const PosteriorSummary summary = summarize_chains(traces, layout);

    Index held_e = -1;
    const auto& exps = inputs.data.layout.experiments;
    for (Index e = 0; e < inputs.data.layout.n_experiments(); ++e)
      if (exps[static_cast<std::size_t>(e)].id == "loo:" + data.samples[col].sample_id)
        held_e = e;
    if (held_e < 0) throw Error("internal: held-out experiment not found");

    const ThresholdResult thr = threshold_for_bfdr(summary.theta_post, bfdr_level);
    LooFold fold;
    fold.held_out_sample = data.samples[col].sample_id;
    fold.theta_post = summary.theta_post.col(held_e);
    fold.threshold = thr.feasible ? thr.t : 1.0;
    fold.n_selected = (fold.theta_post.array() > fold.threshold).count();
    result.folds[f] = std::move(fold);
  };

  if (jobs <= 1) {
    for (std::size_t f = 0; f < control_cols.size(); ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&, w] {
        try {
          for (std::size_t f = next.fetch_add(1); f < control_cols.size();
               f = next.fetch_add(1))
            run_fold(f);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    for (auto& t : workers) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return result;
}

Index LooResult::folds_with_selections() const {
  Index n = 0;
  for (const auto& f : folds)
    if (f.n_selected > 0) ++n;
  return n;
}

}  // namespace cfacar
