#pragma once

#include "cfacar/gene_sets.hpp"
#include "cfacar/network.hpp"
#include "cfacar/types.hpp"

#include <string>
#include <vector>

namespace cfacar {

struct SampleInfo {
  std::string sample_id;
  std::string experiment_id;
  int replicate_index = 0;
  bool is_control = false;
};

struct Experiment {
  std::string id;
  bool is_control = false;
  std::vector<Index> columns;  // replicate columns of this experiment
};

// Column -> experiment grouping. Perturbation indicators live at experiment
// granularity; factors and perturbation effects at column granularity.
struct ExperimentLayout {
  std::vector<Experiment> experiments;
  std::vector<Index> column_experiment;  // size N

  Index n_experiments() const { return static_cast<Index>(experiments.size()); }
  Index n_case_experiments() const;
  std::vector<std::string> experiment_ids() const;
};

// Centered p x N expression matrix plus sample metadata. Values are centered
// gene-wise on the control-group mean; the subtracted mean is kept so folds
// can re-center after reassigning samples.
struct ExpressionDataset {
  Matrixd values;
  Vectord control_mean;
  std::vector<std::string> gene_ids;
  std::vector<SampleInfo> samples;
  ExperimentLayout layout;

  Index n_genes() const { return values.rows(); }
  Index n_samples() const { return values.cols(); }
};

ExperimentLayout build_layout(const std::vector<SampleInfo>& samples);

// Validates metadata, groups experiments and centers on the control mean.
ExpressionDataset make_dataset(Matrixd raw, std::vector<std::string> gene_ids,
                               std::vector<SampleInfo> samples);

// Uncenter, mutate sample roles, recenter: used by leave-one-out validation.
ExpressionDataset with_samples(const ExpressionDataset& d, std::vector<SampleInfo> samples);

// expr.tsv: header gene_id\t<sample ids>; meta.tsv columns:
// sample_id, experiment_id, replicate_index, is_control.
ExpressionDataset load_dataset(const fs::path& expr_tsv, const fs::path& meta_tsv);
void write_dataset(const fs::path& expr_tsv, const fs::path& meta_tsv,
                   const ExpressionDataset& d, bool uncentered = false);

// Structural-zero pattern of the loading matrix: mask(k,j) = 1 iff gene k
// belongs to pathway j.
struct LoadingMask {
  Eigen::MatrixXi mask;                        // p x q
  Eigen::VectorXi row_counts;                  // pathways per gene
  std::vector<std::vector<Index>> row_members; // pathway indices per gene

  Index n_genes() const { return mask.rows(); }
  Index n_pathways() const { return mask.cols(); }
  Index n_free() const { return row_counts.sum(); }
};

struct MaskedInputs {
  ExpressionDataset data;  // genes without any retained pathway removed
  LoadingMask mask;
  std::vector<std::string> dropped_genes;
};

// Aligns a dataset with a pathway catalog restricted to the network's
// pathway order. Genes outside every retained pathway carry no information
// about the factors and are excluded, with a report.
MaskedInputs build_mask(const ExpressionDataset& data, const GeneSetCollection& catalog,
                        const std::vector<std::string>& pathway_order);

LoadingMask mask_from_catalog(const std::vector<std::string>& gene_ids,
                              const GeneSetCollection& catalog,
                              const std::vector<std::string>& pathway_order);

}  // namespace cfacar
