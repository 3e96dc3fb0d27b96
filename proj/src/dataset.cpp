#include "cfacar/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cfacar {

Index ExperimentLayout::n_case_experiments() const {
  Index n = 0;
  for (const auto& e : experiments)
    if (!e.is_control) ++n;
  return n;
}

std::vector<std::string> ExperimentLayout::experiment_ids() const {
  std::vector<std::string> ids;
  ids.reserve(experiments.size());
  for (const auto& e : experiments) ids.push_back(e.id);
  return ids;
}

ExperimentLayout build_layout(const std::vector<SampleInfo>& samples) {
  ExperimentLayout layout;
  std::map<std::string, Index> pos;
  layout.column_experiment.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    auto it = pos.find(s.experiment_id);
    if (it == pos.end()) {
      it = pos.emplace(s.experiment_id, static_cast<Index>(layout.experiments.size())).first;
      layout.experiments.push_back({s.experiment_id, s.is_control, {}});
    } else if (layout.experiments[static_cast<std::size_t>(it->second)].is_control !=
               s.is_control) {
      throw Error("experiment '" + s.experiment_id + "' mixes case and control samples");
    }
    layout.experiments[static_cast<std::size_t>(it->second)].columns.push_back(
        static_cast<Index>(i));
    layout.column_experiment[i] = it->second;
  }
  return layout;
}

ExpressionDataset make_dataset(Matrixd raw, std::vector<std::string> gene_ids,
                               std::vector<SampleInfo> samples) {
  if (raw.cols() != static_cast<Index>(samples.size()))
    throw Error("sample metadata length does not match expression columns");
  if (raw.rows() != static_cast<Index>(gene_ids.size()))
    throw Error("gene id list does not match expression rows");
  std::set<std::string> ids(gene_ids.begin(), gene_ids.end());
  if (ids.size() != gene_ids.size()) throw Error("duplicate gene ids in expression matrix");

  ExpressionDataset d;
  d.layout = build_layout(samples);

  std::vector<Index> controls;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].is_control) controls.push_back(static_cast<Index>(i));
  if (controls.empty()) throw Error("dataset has no control samples to center on");

  d.control_mean.setZero(raw.rows());
  for (Index c : controls) d.control_mean += raw.col(c);
  d.control_mean /= static_cast<double>(controls.size());
  raw.colwise() -= d.control_mean;

  d.values = std::move(raw);
  d.gene_ids = std::move(gene_ids);
  d.samples = std::move(samples);
  return d;
}

ExpressionDataset with_samples(const ExpressionDataset& d, std::vector<SampleInfo> samples) {
  if (samples.size() != d.samples.size())
    throw Error("with_samples: sample count must be unchanged");
  Matrixd raw = d.values;
  raw.colwise() += d.control_mean;
  return make_dataset(std::move(raw), d.gene_ids, std::move(samples));
}

ExpressionDataset load_dataset(const fs::path& expr_tsv, const fs::path& meta_tsv) {
  auto table = read_labeled_matrix(expr_tsv, '\t');

  std::ifstream in(meta_tsv);
  if (!in) throw Error("cannot open " + meta_tsv.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty metadata file: " + meta_tsv.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line, '\t');
  const std::vector<std::string> expected = {"sample_id", "experiment_id", "replicate_index",
                                             "is_control"};
  if (header != expected)
    throw Error(meta_tsv.string() +
                ": header must be sample_id\texperiment_id\treplicate_index\tis_control");

  std::map<std::string, SampleInfo> by_id;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 4)
      throw Error(meta_tsv.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    SampleInfo s;
    s.sample_id = f[0];
    s.experiment_id = f[1];
    s.replicate_index = std::stoi(f[2]);
    if (f[3] == "1" || f[3] == "true")
      s.is_control = true;
    else if (f[3] == "0" || f[3] == "false")
      s.is_control = false;
    else
      throw Error(meta_tsv.string() + ":" + std::to_string(lineno) +
                  ": is_control must be 0/1/true/false");
    if (!by_id.emplace(s.sample_id, s).second)
      throw Error(meta_tsv.string() + ":" + std::to_string(lineno) + ": duplicate sample id '" +
                  s.sample_id + "'");
  }

  std::vector<SampleInfo> samples;
  samples.reserve(table.col_labels.size());
  for (const auto& sid : table.col_labels) {
    auto it = by_id.find(sid);
    if (it == by_id.end())
      throw Error("sample '" + sid + "' in expression matrix missing from metadata");
    samples.push_back(it->second);
  }
  if (by_id.size() != samples.size())
    throw Error("metadata contains samples absent from the expression matrix");

  return make_dataset(std::move(table.values), std::move(table.row_labels), std::move(samples));
}

void write_dataset(const fs::path& expr_tsv, const fs::path& meta_tsv,
                   const ExpressionDataset& d, bool uncentered) {
  Matrixd values = d.values;
  if (uncentered) values.colwise() += d.control_mean;
  std::vector<std::string> cols;
  cols.reserve(d.samples.size());
  for (const auto& s : d.samples) cols.push_back(s.sample_id);
  write_labeled_matrix(expr_tsv, values, d.gene_ids, cols, "gene_id", '\t');

  std::ostringstream out;
  out << "sample_id\texperiment_id\treplicate_index\tis_control\n";
  for (const auto& s : d.samples)
    out << s.sample_id << '\t' << s.experiment_id << '\t' << s.replicate_index << '\t'
        << (s.is_control ? 1 : 0) << '\n';
  write_text_file(meta_tsv, out.str());
}

LoadingMask mask_from_catalog(const std::vector<std::string>& gene_ids,
                              const GeneSetCollection& catalog,
                              const std::vector<std::string>& pathway_order) {
  const Index p = static_cast<Index>(gene_ids.size());
  const Index q = static_cast<Index>(pathway_order.size());
  LoadingMask m;
  m.mask.setZero(p, q);
  m.row_counts.setZero(p);
  m.row_members.resize(static_cast<std::size_t>(p));

  std::map<std::string, Index> gene_pos;
  for (Index k = 0; k < p; ++k) gene_pos[gene_ids[static_cast<std::size_t>(k)]] = k;

  for (Index j = 0; j < q; ++j) {
    const GeneSet* set = catalog.find(pathway_order[static_cast<std::size_t>(j)]);
    if (!set) throw Error("pathway '" + pathway_order[static_cast<std::size_t>(j)] +
                          "' not found in catalog");
    for (const auto& g : set->genes) {
      auto it = gene_pos.find(g);
      if (it == gene_pos.end()) continue;
      m.mask(it->second, j) = 1;
    }
  }
  for (Index k = 0; k < p; ++k) {
    for (Index j = 0; j < q; ++j)
      if (m.mask(k, j)) m.row_members[static_cast<std::size_t>(k)].push_back(j);
    m.row_counts[k] = static_cast<int>(m.row_members[static_cast<std::size_t>(k)].size());
  }
  return m;
}

MaskedInputs build_mask(const ExpressionDataset& data, const GeneSetCollection& catalog,
                        const std::vector<std::string>& pathway_order) {
  LoadingMask full = mask_from_catalog(data.gene_ids, catalog, pathway_order);

  std::vector<Index> keep;
  MaskedInputs out;
  for (Index k = 0; k < full.n_genes(); ++k) {
    if (full.row_counts[k] > 0)
      keep.push_back(k);
    else
      out.dropped_genes.push_back(data.gene_ids[static_cast<std::size_t>(k)]);
  }
  if (keep.empty()) throw Error("no expression genes belong to any retained pathway");

  out.data = data;
  if (out.dropped_genes.empty()) {
    out.mask = std::move(full);
    return out;
  }
  const Index p = static_cast<Index>(keep.size());
  Matrixd values(p, data.values.cols());
  Vectord cmean(p);
  std::vector<std::string> genes;
  genes.reserve(static_cast<std::size_t>(p));
  out.mask.mask.resize(p, full.n_pathways());
  for (Index r = 0; r < p; ++r) {
    values.row(r) = data.values.row(keep[static_cast<std::size_t>(r)]);
    cmean[r] = data.control_mean[keep[static_cast<std::size_t>(r)]];
    genes.push_back(data.gene_ids[static_cast<std::size_t>(keep[static_cast<std::size_t>(r)])]);
    out.mask.mask.row(r) = full.mask.row(keep[static_cast<std::size_t>(r)]);
  }
  out.data.values = std::move(values);
  out.data.control_mean = std::move(cmean);
  out.data.gene_ids = std::move(genes);

  out.mask.row_counts.setZero(p);
  out.mask.row_members.assign(static_cast<std::size_t>(p), {});
  for (Index k = 0; k < p; ++k) {
    for (Index j = 0; j < out.mask.n_pathways(); ++j)
      if (out.mask.mask(k, j)) out.mask.row_members[static_cast<std::size_t>(k)].push_back(j);
    out.mask.row_counts[k] =
        static_cast<int>(out.mask.row_members[static_cast<std::size_t>(k)].size());
  }
  return out;
}

}  // namespace cfacar
