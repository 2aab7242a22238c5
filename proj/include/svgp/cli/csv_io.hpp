#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "svgp/gp_exact.hpp"

namespace svgp::cli {

struct LoadedCsv {
  Dataset data;
  std::vector<std::string> feature_names;
  std::string target_name;
  // standardization actually applied, for traceability
  Eigen::VectorXd x_mean, x_std;
  double y_mean = 0.0;
};

// Numeric CSV ingestion: the target column becomes y (mean-centered), the
// remaining columns become X with per-column standardization. The target is
// named by header or 0-based index.
LoadedCsv load_csv(const std::string& path, const std::string& target_column, double sigma2);

// Generic table for trace aggregation: header plus string cells ("" = null).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv_table(const std::string& path);
void write_csv_table(const std::string& path, const CsvTable& table,
                     const std::string& comment = "");

std::string format_double(double v);

}  // namespace svgp::cli
