#include "cfacar/gene_sets.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace cfacar {

void GeneSetCollection::validate() const {
  std::set<std::string> seen;
  for (const auto& s : sets) {
    if (s.id.empty()) throw Error("gene set with empty id");
    if (!seen.insert(s.id).second) throw Error("duplicate gene set id: " + s.id);
    if (s.genes.empty()) throw Error("empty gene set: " + s.id);
    for (const auto& g : s.genes)
      if (g.empty()) throw Error("empty gene id in set: " + s.id);
  }
}

std::vector<std::string> GeneSetCollection::gene_union() const {
  std::set<std::string> all;
  for (const auto& s : sets) all.insert(s.genes.begin(), s.genes.end());
  return {all.begin(), all.end()};
}

const GeneSet* GeneSetCollection::find(const std::string& id) const {
  for (const auto& s : sets)
    if (s.id == id) return &s;
  return nullptr;
}

GeneSetCollection read_gmt(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  GeneSetCollection c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 3 || fields[0].empty())
      throw Error(path.string() + ":" + std::to_string(lineno) +
                  ": malformed GMT line (need id, description, >=1 gene)");
    GeneSet s;
    s.id = fields[0];
    s.description = fields[1];
    for (std::size_t i = 2; i < fields.size(); ++i)
      if (!fields[i].empty()) s.genes.push_back(fields[i]);
    if (s.genes.empty())
      throw Error(path.string() + ":" + std::to_string(lineno) + ": set '" + s.id +
                  "' has no genes");
    std::sort(s.genes.begin(), s.genes.end());
    s.genes.erase(std::unique(s.genes.begin(), s.genes.end()), s.genes.end());
    c.sets.push_back(std::move(s));
  }
  c.validate();
  return c;
}

void write_gmt(const fs::path& path, const GeneSetCollection& c) {
  std::ostringstream out;
  for (const auto& s : c.sets) {
    out << s.id << '\t' << (s.description.empty() ? "na" : s.description);
    for (const auto& g : s.genes) out << '\t' << g;
    out << '\n';
  }
  write_text_file(path, out.str());
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  // both inputs sorted unique
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace cfacar
