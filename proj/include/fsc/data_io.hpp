#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsc/metrics.hpp"

namespace fsc {

/// Column selection for a labelled CSV file. Columns are referred to by
/// header name, or by 0-based position when the file has no header (or the
/// token matches no header name and is a plain integer).
struct DatasetSchema {
  std::string class_column;
  std::vector<std::string> feature_columns;  // empty: every non-class column
  char delimiter = ',';
  bool header = true;
  bool standardize = false;
  /// Treat an empty class cell as "unlabelled" (truth = -1) instead of an error.
  bool allow_unlabelled = false;
};

struct Dataset {
  Eigen::MatrixXd x;                     // n x p
  Partition truth;                       // 0..G-1, or -1 for unlabelled rows
  std::vector<std::string> class_names;  // index -> original label
  std::vector<std::string> feature_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

/// Reads a key=value schema file (class_col, feature_cols, delimiter,
/// header, standardize). Lines starting with '#' are ignored.
DatasetSchema load_schema_file(const std::string& path);

Dataset read_csv(std::istream& in, const DatasetSchema& schema);
Dataset load_csv(const std::string& path, const DatasetSchema& schema);

/// Writes features and class names back out with round-trip precision.
void write_csv(std::ostream& out, const Dataset& data, const std::string& class_column = "class",
               char delimiter = ',');

/// Z-scores each column in place (sample standard deviation). Constant
/// columns are left centred but unscaled.
void standardize_columns(Eigen::MatrixXd& x);

}  // namespace fsc
