#include "monomvn/data_layout.hpp"

#include "monomvn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace monomvn {

DataMatrix::DataMatrix(Eigen::MatrixXd v, std::vector<std::string> labels_in)
    : values(std::move(v)), cells(static_cast<std::size_t>(values.size()), Cell::value), labels(std::move(labels_in)) {
  if (labels.empty()) {
    for (int j = 0; j < cols(); ++j) labels.push_back("V" + std::to_string(j + 1));
  }
  for (int j = 0; j < cols(); ++j)
    for (int i = 0; i < rows(); ++i)
      if (std::isnan(values(i, j))) cell(i, j) = Cell::missing;
}

int DataMatrix::missing_in_column(int j) const {
  int c = 0;
  for (int i = 0; i < rows(); ++i) c += cell(i, j) == Cell::missing;
  return c;
}

int DataMatrix::gap_count() const {
  return static_cast<int>(std::count(cells.begin(), cells.end(), Cell::gap));
}

void DataMatrix::set_missing(int i, int j) {
  cell(i, j) = Cell::missing;
  values(i, j) = std::numeric_limits<double>::quiet_NaN();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

char detect_delimiter(const std::string& header) {
  for (char c : {'\t', ',', ';'})
    if (header.find(c) != std::string::npos) return c;
  return ',';
}

}  // namespace

DataMatrix load_matrix(std::istream& in, const std::string& missing_token, char delimiter) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty input: expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (delimiter == 0) delimiter = detect_delimiter(line);
  std::vector<std::string> labels = split(line, delimiter);
  const std::size_t m = labels.size();
  if (m == 0) throw DataError("header row has no columns");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter);
    if (fields.size() != m) {
      throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " + std::to_string(m) +
                      " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::string& f = fields[j];
      if (f.empty() || f == missing_token || f == "NaN" || f == "NA") {
        row[j] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw DataError("unparseable cell '" + f + "' at line " + std::to_string(line_no) + ", column " +
                        std::to_string(j + 1));
      }
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows");

  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  DataMatrix d(std::move(v), std::move(labels));
  validate_matrix(d);
  return d;
}

DataMatrix load_matrix_file(const std::string& path, const std::string& missing_token, char delimiter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  return load_matrix(in, missing_token, delimiter);
}

void validate_matrix(const DataMatrix& d) {
  for (int j = 0; j < d.cols(); ++j) {
    const int present = d.rows() - d.missing_in_column(j);
    if (present == 0) throw DataError("column " + std::to_string(j + 1) + " ('" + d.labels[j] + "') has no values");
    if (present < 2)
      throw DataError("column " + std::to_string(j + 1) + " ('" + d.labels[j] + "') has fewer than 2 values");
  }
}

MonotoneLayout order_monotone(const DataMatrix& d) {
  const int n = d.rows();
  const int m = d.cols();
  MonotoneLayout L;
  L.col_order.resize(m);
  std::iota(L.col_order.begin(), L.col_order.end(), 0);
  std::vector<int> col_missing(m);
  for (int j = 0; j < m; ++j) col_missing[j] = d.missing_in_column(j);
  std::stable_sort(L.col_order.begin(), L.col_order.end(),
                   [&](int a, int b) { return col_missing[a] < col_missing[b]; });

  std::vector<int> row_missing(n, 0);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) row_missing[i] += d.cell(i, j) == Cell::missing;
  L.row_order.resize(n);
  std::iota(L.row_order.begin(), L.row_order.end(), 0);
  std::stable_sort(L.row_order.begin(), L.row_order.end(),
                   [&](int a, int b) { return row_missing[a] < row_missing[b]; });

  L.n_obs.resize(m);
  for (int k = 0; k < m; ++k) L.n_obs[k] = n - col_missing[L.col_order[k]];
  L.gaps.assign(m, {});
  return L;
}

std::vector<std::pair<int, int>> check_monotone(const MonotoneLayout& layout, const DataMatrix& d) {
  std::vector<std::pair<int, int>> bad;
  const int n = layout.rows();
  const int m = layout.cols();
  for (int r = 0; r < n; ++r) {
    const int i = layout.row_order[r];
    // Last ordered column present in this row.
    int last = -1;
    for (int k = m - 1; k >= 0; --k) {
      if (d.cell(i, layout.col_order[k]) != Cell::missing) {
        last = k;
        break;
      }
    }
    for (int k = 0; k < last; ++k)
      if (d.cell(i, layout.col_order[k]) == Cell::missing) bad.emplace_back(r, k);
  }
  return bad;
}

std::pair<DataMatrix, MonotoneLayout> mark_gaps(const DataMatrix& d, const MonotoneLayout& layout) {
  DataMatrix out = d;
  const int n = layout.rows();
  const int m = layout.cols();
  for (const auto& [r, k] : check_monotone(layout, d)) {
    const int i = layout.row_order[r];
    const int j = layout.col_order[k];
    out.cell(i, j) = Cell::gap;
    out.values(i, j) = std::numeric_limits<double>::quiet_NaN();
  }

  MonotoneLayout L = layout;
  std::vector<int> row_missing(n, 0);
  std::vector<int> row_gaps(n, 0);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      row_missing[i] += out.cell(i, j) == Cell::missing;
      row_gaps[i] += out.cell(i, j) == Cell::gap;
    }
  }
  // Within equal support, rows holding gaps go first so the last supported
  // row of a column is preferably a value.
  std::stable_sort(L.row_order.begin(), L.row_order.end(), [&](int a, int b) {
    if (row_missing[a] != row_missing[b]) return row_missing[a] < row_missing[b];
    return row_gaps[a] > row_gaps[b];
  });
  for (int k = 0; k < m; ++k) {
    const int j = L.col_order[k];
    L.gaps[k].clear();
    int c = 0;
    for (int r = 0; r < n; ++r) {
      const Cell s = out.cell(L.row_order[r], j);
      if (s != Cell::missing) ++c;
      if (s == Cell::gap) L.gaps[k].push_back(r);
    }
    L.n_obs[k] = c;
  }
  return {std::move(out), std::move(L)};
}

ColumnDesign design_for_column(int j, const DataMatrix& d, const MonotoneLayout& layout, bool include_intercept) {
  if (j < 0 || j >= layout.cols()) throw UsageError("design_for_column: column index out of range");
  const int nj = layout.n_obs[j];
  const int off = include_intercept ? 1 : 0;
  ColumnDesign out;
  out.Y.resize(nj, j + off);
  out.y.resize(nj);
  for (int r = 0; r < nj; ++r) {
    const int i = layout.row_order[r];
    if (include_intercept) out.Y(r, 0) = 1.0;
    for (int k = 0; k <= j; ++k) {
      const int c = layout.col_order[k];
      const Cell s = d.cell(i, c);
      const double v = d.values(i, c);
      if (s == Cell::missing || std::isnan(v)) {
        throw DataError(std::string(s == Cell::gap ? "unimputed gap" : "missing value") + " at row " +
                        std::to_string(i + 1) + ", column '" + d.labels[c] + "'");
      }
      if (k < j)
        out.Y(r, k + off) = v;
      else
        out.y(r) = v;
    }
  }
  return out;
}

DataMatrix reorder(const DataMatrix& d, const MonotoneLayout& layout) {
  const int n = layout.rows();
  const int m = layout.cols();
  DataMatrix out;
  out.values.resize(n, m);
  out.cells.resize(static_cast<std::size_t>(n) * m);
  for (int k = 0; k < m; ++k) {
    out.labels.push_back(d.labels[layout.col_order[k]]);
    for (int r = 0; r < n; ++r) {
      out.values(r, k) = d.values(layout.row_order[r], layout.col_order[k]);
      out.cell(r, k) = d.cell(layout.row_order[r], layout.col_order[k]);
    }
  }
  return out;
}

}  // namespace monomvn
