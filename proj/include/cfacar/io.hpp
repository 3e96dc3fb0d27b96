#pragma once

#include "cfacar/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cfacar {

namespace fs = std::filesystem;

// Shortest exact decimal representation; identical values -> identical text,
// which is what makes rerun outputs byte-comparable.
std::string format_double(double x);

std::vector<std::string> split(const std::string& line, char sep);

// Labeled dense matrix <-> delimited text. Header row carries column labels;
// first column carries row labels.
void write_labeled_matrix(const fs::path& path, const Matrixd& m,
                          const std::vector<std::string>& row_labels,
                          const std::vector<std::string>& col_labels,
                          const std::string& corner, char sep);

struct LabeledMatrix {
  Matrixd values;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
};

LabeledMatrix read_labeled_matrix(const fs::path& path, char sep);

void write_text_file(const fs::path& path, const std::string& content);
std::string read_text_file(const fs::path& path);

// FNV-1a, used for input fingerprints in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const fs::path& path);
std::string hex64(std::uint64_t v);

}  // namespace cfacar
