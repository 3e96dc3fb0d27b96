#pragma once

#include "cfacar/gene_sets.hpp"
#include "cfacar/types.hpp"

#include <string>
#include <vector>

namespace cfacar {

// Pathway x function weight matrix. Entries are Jaccard indices; anything
// below the build threshold is exactly zero.
struct BipartiteIncidence {
  std::vector<std::string> row_ids;  // pathways
  std::vector<std::string> col_ids;  // functions
  Matrixd weights;
};

struct DropRecord {
  std::string id;
  std::string reason;
};

// Standardized pathway-pathway interaction network: symmetric, zero diagonal,
// entries in [0,1], with cached extreme eigenvalues.
struct PathwayNetwork {
  std::vector<std::string> pathway_ids;
  Matrixd weights;  // W
  double eig_min = 0.0;
  double eig_max = 0.0;
  std::vector<DropRecord> dropped;

  Index size() const { return weights.rows(); }
  bool is_null() const { return weights.size() == 0 || weights.isZero(0.0); }
};

struct GammaSupport {
  double lo = 0.0;
  double hi = 0.0;
  // true when W == 0 and the admissible set collapses to the single point 0
  bool degenerate = false;
  bool contains(double g) const {
    return degenerate ? g == 0.0 : (g > lo && g < hi);
  }
  double width() const { return hi - lo; }
};

inline constexpr double kDefaultJaccardThreshold = 0.03;
inline constexpr double kDefaultGammaMargin = 0.005;

BipartiteIncidence build_incidence(const GeneSetCollection& pathways,
                                   const GeneSetCollection& functions,
                                   double jaccard_threshold = kDefaultJaccardThreshold);

// Pathway-mode projection A = M M^T followed by cosine standardization
// W_ij = A_ij / sqrt(A_ii A_jj), zeroed diagonal. Pathways with A_ii = 0 are
// dropped (default) or kept as isolated nodes when keep_isolated is set;
// either way they are recorded in the drop report.
PathwayNetwork project_and_standardize(const BipartiteIncidence& m, bool keep_isolated = false);

// Admissible open interval for the coupling parameter, trimmed by margin so
// I - gamma*W stays comfortably positive definite.
GammaSupport gamma_support(const PathwayNetwork& net, double margin = kDefaultGammaMargin);

// Same pathways, empty network: the network-free (EFA) degenerate case.
PathwayNetwork null_network(const PathwayNetwork& net);

// Component label per node over the nonzero pattern of W.
std::vector<int> connected_components(const Matrixd& w);

// Edge-list TSV + JSON sidecar (ordering, eigen bounds, support, drop report).
void write_network(const fs::path& edges_tsv, const fs::path& sidecar_json,
                   const PathwayNetwork& net, double jaccard_threshold,
                   double gamma_margin);
PathwayNetwork load_network(const fs::path& sidecar_json);

}  // namespace cfacar
