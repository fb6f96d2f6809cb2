#pragma once

#include "monomvn/engine.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace monomvn {

/// Shortest round-trip decimal form; "NA" for NaN.
std::string format_double(double x);

/// Writes a labeled table. `row_labels` may be empty, in which case the first
/// column is omitted.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::string>& row_labels, const Eigen::MatrixXd& values);

/// Summary layout: header "row,<labels>", one "mu" row, then one row per
/// label holding that row of Sigma.
void write_summary_csv(const std::string& path, const std::vector<std::string>& labels, const MvnEstimate& e);
MvnEstimate read_summary_csv(const std::string& path, std::vector<std::string>* labels = nullptr);

/// Columnar binary: magic, dimension, draw count, labels, then for each of
/// mu_1..mu_m and the upper triangle of Sigma (row-major) a run of T doubles.
void write_draws_binary(const std::string& path, const std::vector<std::string>& labels,
                        const std::vector<MvnEstimate>& draws);
std::vector<MvnEstimate> read_draws_binary(const std::string& path, std::vector<std::string>* labels = nullptr);

/// One row per draw: mu_<a> columns, then sigma_<a>_<b> for a <= b.
void write_draws_csv(const std::string& path, const std::vector<std::string>& labels,
                     const std::vector<MvnEstimate>& draws);

/// True when the file starts with the draws-binary magic.
bool is_draws_binary(const std::string& path);

/// Rows: responses; columns: factors then assets. Non-predictor pairs are "NA".
void write_inclusion_csv(const std::string& path, const PosteriorDrawSet& draws);

}  // namespace monomvn
