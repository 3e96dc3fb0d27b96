#pragma once

#include "cfacar/config.hpp"
#include "cfacar/dataset.hpp"
#include "cfacar/network.hpp"
#include "cfacar/rng.hpp"
#include "cfacar/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cfacar {

// Synthetic pathway/function catalogs with overlap structure that yields a
// connected weighted network after projection.
struct ToyCatalogs {
  GeneSetCollection pathways;
  GeneSetCollection functions;
};

ToyCatalogs make_toy_catalog(int n_pathways, int n_genes, int n_functions, std::uint64_t seed);

// One simulated study: single perturbed pathway per case experiment at a
// fixed signal-to-noise ratio, unit pathway and gene noise.
struct SimDesign {
  GeneSetCollection pathways;
  GeneSetCollection functions;
  double jaccard_threshold = kDefaultJaccardThreshold;
  double snr = 3.5;
  int n_case_experiments = 10;
  int replicates_per_experiment = 5;
  int n_control_columns = 50;
  double gamma_frac = 0.9;  // true coupling as a fraction of the upper support bound
  double psi_true = 1.0;
  double sigma_true = 1.0;
  std::uint64_t seed = 1;
};

struct GeneratedData {
  ExpressionDataset data;
  LoadingMask mask;
  PathwayNetwork net;
  Eigen::MatrixXi truth;               // q x n_case_experiments
  std::vector<Index> case_experiments; // layout indices of the case experiments
  double gamma_true = 0.0;
};

GeneratedData generate_dataset(const SimDesign& design);

// Reassigns round(fraction * n_genes) catalog genes: each selected gene is
// removed from all its pathways and added to one uniformly chosen other
// pathway. The expression data itself is untouched.
GeneSetCollection corrupt_catalog(const GeneSetCollection& catalog, double fraction, Rng& rng);

struct RocResult {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
  double auc = 0.0;
  bool degenerate = false;  // truth all zero or all one
};

// Threshold sweep over the unique posterior values; trapezoidal AUC.
RocResult roc_from_posterior(const Matrixd& theta_post, const Eigen::MatrixXi& truth);

// ---------------------------------------------------------------------------
// Benchmark harness (CFA-CAR vs the network-free EFA baseline)
// ---------------------------------------------------------------------------

struct BenchScenario {
  std::string mode = "snr";  // "snr" or "corruption"
  std::vector<double> levels = {0.5, 1.5, 2.5, 3.5, 4.5, 5.5};
  double corruption_snr = 3.5;  // data SNR used in corruption mode
  int replicates = 10;

  int n_case_experiments = 10;
  int replicates_per_experiment = 5;
  int n_control_columns = 50;
  double gamma_frac = 0.9;

  int catalog_pathways = 10;
  int catalog_genes = 300;
  int catalog_functions = 60;
  std::uint64_t catalog_seed = 7;

  std::uint64_t seed = 1;
  std::vector<std::string> models = {"cfa-car", "efa"};
  RunConfig run;  // sampler and prior settings used for every fit
};

BenchScenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const BenchScenario& s);
BenchScenario load_scenario(const fs::path& path);

struct ReplicateOutcome {
  double level = 0.0;
  std::string model;
  int replicate = 0;
  double auc = 0.0;
  bool ok = false;
  std::string error;
};

struct ComparisonRow {
  double level = 0.0;
  std::string model;
  double mean_auc = 0.0;
  double stderr_auc = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

struct BenchResult {
  std::vector<ComparisonRow> table;
  std::vector<ReplicateOutcome> replicates;
};

// Fits every model on identical data within a (level, replicate) cell.
// Failed replicates are excluded from the summary and counted.
BenchResult run_comparison(const BenchScenario& scenario, int jobs);

void write_bench_outputs(const fs::path& dir, const BenchScenario& scenario,
                         const BenchResult& result);

// First-cell dataset export so file-based pipelines have worked examples.
void export_scenario_data(const fs::path& dir, const BenchScenario& scenario);

}  // namespace cfacar
