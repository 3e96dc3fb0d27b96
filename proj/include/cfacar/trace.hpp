#pragma once

#include "cfacar/dataset.hpp"
#include "cfacar/model.hpp"
#include "cfacar/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cfacar {

// Streaming mean/variance (Welford) over a fixed-length parameter vector.
struct RunningMoments {
  long long n = 0;
  Vectord mean;
  Vectord m2;

  void init(Index size) {
    n = 0;
    mean.setZero(size);
    m2.setZero(size);
  }
  void add(const Vectord& v) {
    ++n;
    Vectord delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2.array() += delta.array() * (v - mean).array();
  }
  Vectord variance() const {
    if (n < 2) return Vectord::Zero(mean.size());
    return m2 / static_cast<double>(n - 1);
  }
};

// Flattening order for the continuous parameters tracked by convergence
// diagnostics: free loadings, factors, shifts, gene variances, coupling,
// factor variance, slab variance.
struct ParamLayout {
  Index n_genes = 0, n_pathways = 0, n_columns = 0;
  std::vector<std::pair<Index, Index>> free_loadings;  // (gene, pathway)

  static ParamLayout make(const LoadingMask& mask, Index n_columns);

  Index size() const {
    return static_cast<Index>(free_loadings.size()) + 2 * n_pathways * n_columns + n_genes + 3;
  }
  Vectord pack(const ModelState& s) const;
  std::string name(Index i) const;
};

// Post-burn-in running summaries for one chain, plus scalar parameter draws.
// Heavy blocks are summarized online; convergence statistics run on the
// absolute values (sign non-identifiability).
struct ChainTrace {
  int chain_id = 0;
  std::uint64_t seed = 0;
  int retained = 0;

  Matrixd theta_mean;   // q x E posterior inclusion means
  Matrixd lambda_mean;  // p x q
  Vectord psi_mean;     // p
  Matrixd corr_mean;    // q x q posterior mean of R(gamma)
  Matrixd snr_mean;     // q x E
  double gamma_mean = 0.0, sigma2_mean = 0.0, tau2_mean = 0.0;

  std::vector<double> gamma_draws, sigma2_draws, tau2_draws;

  RunningMoments abs_moments;  // |parameter| series, for Gelman-Rubin
  RunningMoments raw_moments;  // parameter series, for posterior summaries

  int gamma_proposals = 0;
  int gamma_accepts = 0;
  double xi_final = 0.0;
  std::vector<std::string> audit_log;

  void init(const ParamLayout& layout, Index n_experiments, bool store_scalars);
  void absorb(const ModelState& s, const ExperimentLayout& layout,
              const Hyperparameters& hyper, const ParamLayout& params);

  double gamma_accept_rate() const {
    return gamma_proposals ? static_cast<double>(gamma_accepts) / gamma_proposals : 0.0;
  }

 private:
  bool store_scalars_ = true;
};

void write_chain_trace(const fs::path& dir, const ChainTrace& t, const ParamLayout& params,
                       const std::vector<std::string>& pathway_ids,
                       const std::vector<std::string>& experiment_ids,
                       const std::vector<std::string>& gene_ids);
ChainTrace read_chain_trace(const fs::path& dir, ParamLayout* layout_out = nullptr);

}  // namespace cfacar
