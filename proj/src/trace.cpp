#include "cfacar/trace.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace cfacar {

using nlohmann::json;

ParamLayout ParamLayout::make(const LoadingMask& mask, Index n_columns) {
  ParamLayout l;
  l.n_genes = mask.n_genes();
  l.n_pathways = mask.n_pathways();
  l.n_columns = n_columns;
  for (Index k = 0; k < mask.n_genes(); ++k)
    for (Index j : mask.row_members[static_cast<std::size_t>(k)]) l.free_loadings.emplace_back(k, j);
  return l;
}

Vectord ParamLayout::pack(const ModelState& s) const {
  Vectord v(size());
  Index at = 0;
  for (const auto& [k, j] : free_loadings) v[at++] = s.loadings(k, j);
  for (Index i = 0; i < n_columns; ++i)
    for (Index j = 0; j < n_pathways; ++j) v[at++] = s.factors(j, i);
  for (Index i = 0; i < n_columns; ++i)
    for (Index j = 0; j < n_pathways; ++j) v[at++] = s.shifts(j, i);
  for (Index k = 0; k < n_genes; ++k) v[at++] = s.gene_var[k];
  v[at++] = s.coupling;
  v[at++] = s.factor_var;
  v[at++] = s.slab_var;
  return v;
}

std::string ParamLayout::name(Index i) const {
  const Index nl = static_cast<Index>(free_loadings.size());
  const Index nf = n_pathways * n_columns;
  if (i < nl) {
    const auto& [k, j] = free_loadings[static_cast<std::size_t>(i)];
    return "lambda[" + std::to_string(k) + "," + std::to_string(j) + "]";
  }
  i -= nl;
  if (i < nf)
    return "omega[" + std::to_string(i % n_pathways) + "," + std::to_string(i / n_pathways) + "]";
  i -= nf;
  if (i < nf)
    return "rho[" + std::to_string(i % n_pathways) + "," + std::to_string(i / n_pathways) + "]";
  i -= nf;
  if (i < n_genes) return "psi[" + std::to_string(i) + "]";
  i -= n_genes;
  if (i == 0) return "gamma";
  if (i == 1) return "sigma2";
  return "tau2";
}

void ChainTrace::init(const ParamLayout& layout, Index n_experiments, bool store_scalars) {
  retained = 0;
  theta_mean.setZero(layout.n_pathways, n_experiments);
  lambda_mean.setZero(layout.n_genes, layout.n_pathways);
  psi_mean.setZero(layout.n_genes);
  corr_mean.setZero(layout.n_pathways, layout.n_pathways);
  snr_mean.setZero(layout.n_pathways, n_experiments);
  gamma_mean = sigma2_mean = tau2_mean = 0.0;
  abs_moments.init(layout.size());
  raw_moments.init(layout.size());
  store_scalars_ = store_scalars;
}

void ChainTrace::absorb(const ModelState& s, const ExperimentLayout& layout,
                        const Hyperparameters& hyper, const ParamLayout& params) {
  ++retained;
  const double w = 1.0 / static_cast<double>(retained);
  theta_mean += (s.indicators.cast<double>() - theta_mean) * w;
  lambda_mean += (s.loadings - lambda_mean) * w;
  psi_mean += (s.gene_var - psi_mean) * w;
  corr_mean += (s.corr - corr_mean) * w;
  gamma_mean += (s.coupling - gamma_mean) * w;
  sigma2_mean += (s.factor_var - sigma2_mean) * w;
  tau2_mean += (s.slab_var - tau2_mean) * w;

  // per-draw signal-to-noise: mean over replicates of |shift| on the noise
  // scale, spike-rescaled when the pathway is not flagged
  const double sigma = std::sqrt(s.factor_var);
  const double spike_scale = 1.0 / (sigma * std::sqrt(hyper.v0));
  Matrixd snr(snr_mean.rows(), snr_mean.cols());
  for (Index e = 0; e < layout.n_experiments(); ++e) {
    const auto& cols = layout.experiments[static_cast<std::size_t>(e)].columns;
    for (Index j = 0; j < snr.rows(); ++j) {
      double acc = 0.0;
      const double scale = s.indicators(j, e) ? 1.0 / sigma : spike_scale;
      for (Index c : cols) acc += std::abs(s.shifts(j, c)) * scale;
      snr(j, e) = acc / static_cast<double>(cols.size());
    }
  }
  snr_mean += (snr - snr_mean) * w;

  const Vectord v = params.pack(s);
  raw_moments.add(v);
  abs_moments.add(v.cwiseAbs());

  if (store_scalars_) {
    gamma_draws.push_back(s.coupling);
    sigma2_draws.push_back(s.factor_var);
    tau2_draws.push_back(s.slab_var);
  }
}

namespace {

std::string csv_series(const std::vector<double>& g, const std::vector<double>& s,
                       const std::vector<double>& t) {
  std::ostringstream out;
  out << "draw,gamma,sigma2,tau2\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    out << i << ',' << format_double(g[i]) << ',' << format_double(s[i]) << ','
        << format_double(t[i]) << '\n';
  return out.str();
}

void write_moments_csv(const fs::path& path, const RunningMoments& abs_m,
                       const RunningMoments& raw_m, const ParamLayout& params) {
  std::ostringstream out;
  out << "param,n,abs_mean,abs_m2,raw_mean,raw_m2\n";
  for (Index i = 0; i < abs_m.mean.size(); ++i)
    out << params.name(i) << ',' << abs_m.n << ',' << format_double(abs_m.mean[i]) << ','
        << format_double(abs_m.m2[i]) << ',' << format_double(raw_m.mean[i]) << ','
        << format_double(raw_m.m2[i]) << '\n';
  write_text_file(path, out.str());
}

}  // namespace

void write_chain_trace(const fs::path& dir, const ChainTrace& t, const ParamLayout& params,
                       const std::vector<std::string>& pathway_ids,
                       const std::vector<std::string>& experiment_ids,
                       const std::vector<std::string>& gene_ids) {
  fs::create_directories(dir);
  write_text_file(dir / "scalars.csv", csv_series(t.gamma_draws, t.sigma2_draws, t.tau2_draws));
  write_moments_csv(dir / "moments.csv", t.abs_moments, t.raw_moments, params);
  write_labeled_matrix(dir / "theta_mean.csv", t.theta_mean, pathway_ids, experiment_ids,
                       "pathway", ',');
  write_labeled_matrix(dir / "snr_mean.csv", t.snr_mean, pathway_ids, experiment_ids, "pathway",
                       ',');
  write_labeled_matrix(dir / "lambda_mean.csv", t.lambda_mean, gene_ids, pathway_ids, "gene",
                       ',');
  write_labeled_matrix(dir / "corr_mean.csv", t.corr_mean, pathway_ids, pathway_ids, "pathway",
                       ',');
  {
    std::ostringstream out;
    out << "gene,psi_mean\n";
    for (Index k = 0; k < t.psi_mean.size(); ++k)
      out << gene_ids[static_cast<std::size_t>(k)] << ',' << format_double(t.psi_mean[k]) << '\n';
    write_text_file(dir / "psi_mean.csv", out.str());
  }

  json j;
  j["chain_id"] = t.chain_id;
  j["seed"] = t.seed;
  j["retained"] = t.retained;
  j["gamma_proposals"] = t.gamma_proposals;
  j["gamma_accepts"] = t.gamma_accepts;
  j["gamma_accept_rate"] = t.gamma_accept_rate();
  j["xi_final"] = t.xi_final;
  j["gamma_mean"] = t.gamma_mean;
  j["sigma2_mean"] = t.sigma2_mean;
  j["tau2_mean"] = t.tau2_mean;
  j["audit_log"] = t.audit_log;
  j["layout"] = {{"n_genes", params.n_genes},
                 {"n_pathways", params.n_pathways},
                 {"n_columns", params.n_columns}};
  write_text_file(dir / "summary.json", j.dump(2) + "\n");
}

ChainTrace read_chain_trace(const fs::path& dir, ParamLayout* layout_out) {
  ChainTrace t;
  json j = json::parse(read_text_file(dir / "summary.json"));
  t.chain_id = j.at("chain_id").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.retained = j.at("retained").get<int>();
  t.gamma_proposals = j.at("gamma_proposals").get<int>();
  t.gamma_accepts = j.at("gamma_accepts").get<int>();
  t.xi_final = j.at("xi_final").get<double>();
  t.gamma_mean = j.at("gamma_mean").get<double>();
  t.sigma2_mean = j.at("sigma2_mean").get<double>();
  t.tau2_mean = j.at("tau2_mean").get<double>();
  t.audit_log = j.at("audit_log").get<std::vector<std::string>>();

  auto theta = read_labeled_matrix(dir / "theta_mean.csv", ',');
  t.theta_mean = theta.values;
  t.snr_mean = read_labeled_matrix(dir / "snr_mean.csv", ',').values;
  t.lambda_mean = read_labeled_matrix(dir / "lambda_mean.csv", ',').values;
  t.corr_mean = read_labeled_matrix(dir / "corr_mean.csv", ',').values;
  auto psi = read_labeled_matrix(dir / "psi_mean.csv", ',');
  t.psi_mean = psi.values.col(0);

  {
    auto scal = read_labeled_matrix(dir / "scalars.csv", ',');
    for (Index i = 0; i < scal.values.rows(); ++i) {
      t.gamma_draws.push_back(scal.values(i, 0));
      t.sigma2_draws.push_back(scal.values(i, 1));
      t.tau2_draws.push_back(scal.values(i, 2));
    }
  }
  {
    auto mom = read_labeled_matrix(dir / "moments.csv", ',');
    const Index np = mom.values.rows();
    t.abs_moments.init(np);
    t.raw_moments.init(np);
    t.abs_moments.n = t.raw_moments.n = static_cast<long long>(mom.values(0, 0));
    t.abs_moments.mean = mom.values.col(1);
    t.abs_moments.m2 = mom.values.col(2);
    t.raw_moments.mean = mom.values.col(3);
    t.raw_moments.m2 = mom.values.col(4);
  }
  if (layout_out) {
    layout_out->n_genes = j.at("layout").at("n_genes").get<Index>();
    layout_out->n_pathways = j.at("layout").at("n_pathways").get<Index>();
    layout_out->n_columns = j.at("layout").at("n_columns").get<Index>();
  }
  return t;
}

}  // namespace cfacar
