#include "nestavg/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "nestavg/errors.hpp"

namespace nestavg {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
    if (end == cell.c_str() || (end && *end != '\0')) return false;
    out.push_back(v);
  }
  return !out.empty();
}

}  // namespace

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RunError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  std::vector<double> row;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (!parse_row(line, row)) {
      if (first) {
        first = false;  // header row
        continue;
      }
      throw RunError("non-numeric row in '" + path + "'");
    }
    first = false;
    if (!rows.empty() && rows.front().size() != row.size())
      throw RunError("ragged rows in '" + path + "'");
    rows.push_back(row);
  }
  if (rows.empty()) throw RunError("no data rows in '" + path + "'");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
  return m;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot write '" + path + "'");
  out << content;
}

bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return in.good();
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace nestavg
