#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

namespace monomvn {

enum class Cell : std::uint8_t { value, missing, gap };

/// n x m observations. Gap cells hold NaN until the engine imputes them.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<Cell> cells;  // column-major, n*m
  std::vector<std::string> labels;

  DataMatrix() = default;
  DataMatrix(Eigen::MatrixXd v, std::vector<std::string> labels = {});

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  Cell cell(int i, int j) const { return cells[static_cast<std::size_t>(j) * rows() + i]; }
  Cell& cell(int i, int j) { return cells[static_cast<std::size_t>(j) * rows() + i]; }
  bool observed(int i, int j) const { return cell(i, j) == Cell::value; }
  int missing_in_column(int j) const;
  int gap_count() const;
  /// Marks (i, j) Missing and clears its value.
  void set_missing(int i, int j);
};

/// Column and row permutations giving a (near) monotone pattern.
/// Position k in `col_order` / `row_order` holds an original index.
struct MonotoneLayout {
  std::vector<int> col_order;
  std::vector<int> row_order;
  std::vector<int> n_obs;                 // n_j, per ordered column
  std::vector<std::vector<int>> gaps;     // r_j: ordered-row positions of gap cells

  int cols() const { return static_cast<int>(col_order.size()); }
  int rows() const { return static_cast<int>(row_order.size()); }
};

/// Parses delimited text with a header row. delimiter 0 means auto-detect
/// (tab, then comma, then semicolon). The empty string is missing as well.
DataMatrix load_matrix(std::istream& in, const std::string& missing_token = "NA", char delimiter = 0);
DataMatrix load_matrix_file(const std::string& path, const std::string& missing_token = "NA", char delimiter = 0);

/// Validates column contents: every column needs at least two values.
void validate_matrix(const DataMatrix& d);

MonotoneLayout order_monotone(const DataMatrix& d);

/// (ordered row, ordered column) cells that break monotonicity: a non-value
/// in column j with a value later in the same row. Gaps count as present.
std::vector<std::pair<int, int>> check_monotone(const MonotoneLayout& layout, const DataMatrix& d);

/// Flags the non-monotone Missing cells as gaps, re-sorts rows and fills r_j.
std::pair<DataMatrix, MonotoneLayout> mark_gaps(const DataMatrix& d, const MonotoneLayout& layout);

/// Regression view of ordered column j (0-based): rows 0..n_j-1 of ordered
/// columns 0..j-1, optionally prefixed with a column of ones.
struct ColumnDesign {
  Eigen::MatrixXd Y;
  Eigen::VectorXd y;
};
ColumnDesign design_for_column(int j, const DataMatrix& d, const MonotoneLayout& layout, bool include_intercept);

/// Copy of `d` with rows and columns physically permuted into layout order.
DataMatrix reorder(const DataMatrix& d, const MonotoneLayout& layout);

}  // namespace monomvn
