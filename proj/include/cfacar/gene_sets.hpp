#pragma once

#include "cfacar/io.hpp"
#include "cfacar/types.hpp"

#include <string>
#include <vector>

namespace cfacar {

// One named gene set. Members are kept sorted and unique; matching is exact,
// case-sensitive string comparison (alias resolution is a preprocessing step,
// not this library's job).
struct GeneSet {
  std::string id;
  std::string description;
  std::vector<std::string> genes;
};

struct GeneSetCollection {
  std::vector<GeneSet> sets;

  Index size() const { return static_cast<Index>(sets.size()); }
  void validate() const;  // unique non-empty ids, non-empty sets
  std::vector<std::string> gene_union() const;  // sorted unique
  const GeneSet* find(const std::string& id) const;
};

// GMT: one set per line, tab-separated: id, description, gene, gene, ...
GeneSetCollection read_gmt(const fs::path& path);
void write_gmt(const fs::path& path, const GeneSetCollection& c);

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace cfacar
