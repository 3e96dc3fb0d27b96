#include "cfacar/network.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace cfacar {

using nlohmann::json;

BipartiteIncidence build_incidence(const GeneSetCollection& pathways,
                                   const GeneSetCollection& functions,
                                   double jaccard_threshold) {
  if (jaccard_threshold < 0.0 || jaccard_threshold >= 1.0)
    throw Error("jaccard threshold must lie in [0,1)");
  if (pathways.sets.empty() || functions.sets.empty())
    throw Error("both gene set collections must be non-empty");
  pathways.validate();
  functions.validate();

  BipartiteIncidence m;
  for (const auto& p : pathways.sets) m.row_ids.push_back(p.id);
  for (const auto& f : functions.sets) m.col_ids.push_back(f.id);
  m.weights.setZero(pathways.size(), functions.size());
  for (Index i = 0; i < pathways.size(); ++i)
    for (Index j = 0; j < functions.size(); ++j) {
      const double w = jaccard(pathways.sets[i].genes, functions.sets[j].genes);
      if (w >= jaccard_threshold && w > 0.0) m.weights(i, j) = w;
    }
  return m;
}

PathwayNetwork project_and_standardize(const BipartiteIncidence& m, bool keep_isolated) {
  const Index q0 = m.weights.rows();
  Matrixd a = m.weights * m.weights.transpose();

  std::vector<Index> kept;
  PathwayNetwork net;
  for (Index i = 0; i < q0; ++i) {
    if (a(i, i) > 0.0 || keep_isolated) {
      kept.push_back(i);
    } else {
      net.dropped.push_back({m.row_ids[i], "no function overlap above threshold"});
    }
  }
  if (kept.empty()) throw Error("all pathways dropped during projection");

  const Index q = static_cast<Index>(kept.size());
  net.weights.setZero(q, q);
  net.pathway_ids.reserve(q);
  for (Index i = 0; i < q; ++i) net.pathway_ids.push_back(m.row_ids[kept[i]]);
  for (Index i = 0; i < q; ++i) {
    const double aii = a(kept[i], kept[i]);
    for (Index j = i + 1; j < q; ++j) {
      const double ajj = a(kept[j], kept[j]);
      if (aii > 0.0 && ajj > 0.0) {
        const double w = a(kept[i], kept[j]) / std::sqrt(aii * ajj);
        net.weights(i, j) = w;
        net.weights(j, i) = w;
      }
    }
    if (keep_isolated && aii == 0.0)
      net.dropped.push_back({net.pathway_ids[i], "isolated: no function overlap above threshold"});
  }

  if (!net.weights.isZero(0.0)) {
    Eigen::SelfAdjointEigenSolver<Matrixd> eig(net.weights, Eigen::EigenvaluesOnly);
    net.eig_min = eig.eigenvalues().minCoeff();
    net.eig_max = eig.eigenvalues().maxCoeff();
  }
  return net;
}

GammaSupport gamma_support(const PathwayNetwork& net, double margin) {
  GammaSupport s;
  if (net.is_null()) {
    s.degenerate = true;
    return s;
  }
  if (!(net.eig_min < 0.0 && net.eig_max > 0.0))
    throw Error("network eigenvalue bounds must straddle zero");
  s.lo = 1.0 / net.eig_min + margin;
  s.hi = 1.0 / net.eig_max - margin;
  if (!(s.lo < 0.0 && s.hi > 0.0))
    throw Error("degenerate coupling support; margin too large for this network");
  return s;
}

PathwayNetwork null_network(const PathwayNetwork& net) {
  PathwayNetwork out;
  out.pathway_ids = net.pathway_ids;
  out.weights.setZero(net.size(), net.size());
  return out;
}

std::vector<int> connected_components(const Matrixd& w) {
  const Index n = w.rows();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int next = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v) {
        if (label[v] < 0 && w(u, v) != 0.0) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

void write_network(const fs::path& edges_tsv, const fs::path& sidecar_json,
                   const PathwayNetwork& net, double jaccard_threshold,
                   double gamma_margin) {
  std::ostringstream edges;
  edges << "pathway_i\tpathway_j\tweight\n";
  for (Index i = 0; i < net.size(); ++i)
    for (Index j = i + 1; j < net.size(); ++j)
      if (net.weights(i, j) != 0.0)
        edges << net.pathway_ids[i] << '\t' << net.pathway_ids[j] << '\t'
              << format_double(net.weights(i, j)) << '\n';
  write_text_file(edges_tsv, edges.str());

  const auto support = gamma_support(net, gamma_margin);
  json j;
  j["pathway_ids"] = net.pathway_ids;
  j["eig_min"] = net.eig_min;
  j["eig_max"] = net.eig_max;
  j["gamma_support"] = {{"lo", support.lo}, {"hi", support.hi}, {"degenerate", support.degenerate}};
  j["jaccard_threshold"] = jaccard_threshold;
  j["gamma_margin"] = gamma_margin;
  j["edge_file"] = edges_tsv.filename().string();
  json drops = json::array();
  for (const auto& d : net.dropped) drops.push_back({{"id", d.id}, {"reason", d.reason}});
  j["dropped"] = drops;
  write_text_file(sidecar_json, j.dump(2) + "\n");
}

PathwayNetwork load_network(const fs::path& sidecar_json) {
  json j = json::parse(read_text_file(sidecar_json));
  PathwayNetwork net;
  net.pathway_ids = j.at("pathway_ids").get<std::vector<std::string>>();
  const Index q = static_cast<Index>(net.pathway_ids.size());
  net.weights.setZero(q, q);
  net.eig_min = j.at("eig_min").get<double>();
  net.eig_max = j.at("eig_max").get<double>();
  for (const auto& d : j.at("dropped"))
    net.dropped.push_back({d.at("id").get<std::string>(), d.at("reason").get<std::string>()});

  std::map<std::string, Index> pos;
  for (Index i = 0; i < q; ++i) pos[net.pathway_ids[i]] = i;

  const fs::path edges = sidecar_json.parent_path() / j.at("edge_file").get<std::string>();
  std::ifstream in(edges);
  if (!in) throw Error("cannot open " + edges.string());
  std::string line;
  std::getline(in, line);  // header
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3)
      throw Error(edges.string() + ":" + std::to_string(lineno) + ": malformed edge line");
    auto a = pos.find(f[0]);
    auto b = pos.find(f[1]);
    if (a == pos.end() || b == pos.end())
      throw Error(edges.string() + ":" + std::to_string(lineno) + ": unknown pathway id");
    const double w = std::stod(f[2]);
    net.weights(a->second, b->second) = w;
    net.weights(b->second, a->second) = w;
  }
  return net;
}

}  // namespace cfacar
