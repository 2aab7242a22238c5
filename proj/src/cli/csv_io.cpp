#include "svgp/cli/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace svgp::cli {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim spaces
    size_t a = cell.find_first_not_of(" \t\r");
    size_t b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

LoadedCsv load_csv(const std::string& path, const std::string& target_column, double sigma2) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv: cannot open " + path);

  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  bool have_header = false;
  int ncols = -1;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = split_row(line);
    if (cells.empty()) continue;
    if (!have_header) {
      // first row is a header when any cell fails numeric parsing
      double tmp;
      bool all_numeric = true;
      for (const auto& c : cells)
        if (!parse_number(c, tmp)) all_numeric = false;
      have_header = true;
      ncols = static_cast<int>(cells.size());
      if (!all_numeric) {
        header = cells;
        continue;
      }
      header.resize(cells.size());
      for (size_t i = 0; i < cells.size(); ++i) header[i] = "col" + std::to_string(i);
      // fall through: the row is data
    }
    if (static_cast<int>(cells.size()) != ncols)
      throw std::invalid_argument("load_csv: ragged row at line " + std::to_string(lineno));
    std::vector<double> vals(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
      if (!parse_number(cells[i], vals[i]))
        throw std::invalid_argument("load_csv: non-numeric or missing cell at line " +
                                    std::to_string(lineno));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: no data rows in " + path);

  int target = -1;
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == target_column) target = static_cast<int>(i);
  if (target < 0) {
    try {
      target = std::stoi(target_column);
    } catch (const std::exception&) {
      throw std::invalid_argument("load_csv: target column not found: " + target_column);
    }
    if (target < 0 || target >= ncols)
      throw std::invalid_argument("load_csv: target column index out of range");
  }

  const int n = static_cast<int>(rows.size());
  const int d = ncols - 1;
  if (d < 1) throw std::invalid_argument("load_csv: need at least one feature column");

  LoadedCsv out;
  out.data.X.resize(n, d);
  out.data.y.resize(n);
  out.data.sigma2 = sigma2;
  out.target_name = header[static_cast<size_t>(target)];
  for (int j = 0, col = 0; j < ncols; ++j) {
    if (j == target) continue;
    out.feature_names.push_back(header[static_cast<size_t>(j)]);
    for (int i = 0; i < n; ++i) out.data.X(i, col) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    ++col;
  }
  for (int i = 0; i < n; ++i) out.data.y[i] = rows[static_cast<size_t>(i)][static_cast<size_t>(target)];

  out.y_mean = out.data.y.mean();
  out.data.y.array() -= out.y_mean;
  out.x_mean = out.data.X.colwise().mean();
  out.x_std.resize(d);
  for (int j = 0; j < d; ++j) {
    double mu = out.x_mean[j];
    double var = (out.data.X.col(j).array() - mu).square().sum() / std::max(1, n - 1);
    double sd = std::sqrt(var);
    out.x_std[j] = sd > 0.0 ? sd : 1.0;
    out.data.X.col(j) = (out.data.X.col(j).array() - mu) / out.x_std[j];
  }
  return out;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_csv_table: cannot open " + path);
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = split_row(line);
    if (t.header.empty())
      t.header = std::move(cells);
    else
      t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw std::invalid_argument("read_csv_table: empty file " + path);
  return t;
}

void write_csv_table(const std::string& path, const CsvTable& table, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_table: cannot write " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  for (size_t i = 0; i < table.header.size(); ++i)
    out << table.header[i] << (i + 1 < table.header.size() ? "," : "\n");
  for (const auto& row : table.rows)
    for (size_t i = 0; i < row.size(); ++i) out << row[i] << (i + 1 < row.size() ? "," : "\n");
}

std::string format_double(double v) {
  char buf[40];
  snprintf(buf, sizeof(buf), "%.12g", v);
  return std::string(buf);
}

}  // namespace svgp::cli
