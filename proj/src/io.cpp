#include "cfacar/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cfacar {

std::string format_double(double x) {
  char buf[40];
  // round-trip exact for doubles
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == x) {
    // prefer the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
      std::sscanf(shorter, "%lg", &back);
      if (back == x) return shorter;
    }
  }
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

void write_labeled_matrix(const fs::path& path, const Matrixd& m,
                          const std::vector<std::string>& row_labels,
                          const std::vector<std::string>& col_labels,
                          const std::string& corner, char sep) {
  if (static_cast<Index>(row_labels.size()) != m.rows() ||
      static_cast<Index>(col_labels.size()) != m.cols())
    throw Error("write_labeled_matrix: label/shape mismatch for " + path.string());
  std::ostringstream out;
  out << corner;
  for (const auto& c : col_labels) out << sep << c;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    out << row_labels[i];
    for (Index j = 0; j < m.cols(); ++j) out << sep << format_double(m(i, j));
    out << '\n';
  }
  write_text_file(path, out.str());
}

LabeledMatrix read_labeled_matrix(const fs::path& path, char sep) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line, sep);
  if (header.size() < 2) throw Error("no data columns in " + path.string());

  LabeledMatrix t;
  t.col_labels.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, sep);
    if (fields.size() != header.size())
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(header.size()) + " fields, got " +
                  std::to_string(fields.size()));
    t.row_labels.push_back(fields[0]);
    std::vector<double> vals(fields.size() - 1);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      try {
        vals[j - 1] = std::stod(fields[j]);
      } catch (const std::exception&) {
        throw Error(path.string() + ":" + std::to_string(lineno) +
                    ": not a number: '" + fields[j] + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.col_labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return t;
}

void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const fs::path& path) {
  auto content = read_text_file(path);
  return fnv1a64(content.data(), content.size());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace cfacar
