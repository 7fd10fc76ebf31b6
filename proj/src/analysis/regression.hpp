// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

namespace cgnmt::analysis {

double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// (cg - std) / std
double relative_gain(double bleu_cg, double bleu_std);
/// Maps each column onto [0, 1]; a constant column becomes all zeros.
std::vector<std::vector<double>> min_max_normalize(const std::vector<std::vector<double>>& rows);

inline const std::array<const char*, 5> kFeatureNames{"TT", "A", "H", "UT", "UTC"};

struct FeatureRow {
  std::string lang;
  std::array<double, 5> x{};  // TT A H UT UTC
  double gain = 0;
};

/// Rows may repeat a language; repeated rows share that language's block.
struct FeatureTable {
  std::vector<FeatureRow> rows;
  std::vector<std::string> languages() const;  // first-appearance order
};

FeatureTable parse_feature_table(const std::string& tsv);
std::string format_feature_table(const FeatureTable& table);

struct RegressionModel {
  double lambda = 0.05;
  std::vector<double> general;                     // phi_ALL
  std::vector<std::string> languages;
  std::vector<std::vector<double>> per_language;   // phi_i
  std::vector<std::vector<double>> design;         // augmented rows actually fitted
  std::vector<double> targets;

  double predict(std::size_t row) const;
  double objective() const;
  /// Objective with the weights given as one flat general-then-blocks vector.
  double objective(const std::vector<double>& flat) const;
  std::vector<double> flat() const;
};

/// Columns are min-max normalized, then each row is augmented as
/// [x ; 0 .. x (own language block) .. 0] and solved from the ridge normal equations.
RegressionModel fit_feature_augmented_ridge(const FeatureTable& table, double lambda = 0.05);
/// Same solve on an explicit (already normalized) design.
RegressionModel fit_augmented(const std::vector<std::string>& row_language, const std::vector<std::vector<double>>& x,
                              const std::vector<double>& y, double lambda);

/// Rows ALL then each language; columns the feature names.
std::string format_weights(const RegressionModel& model, const std::vector<std::string>& feature_names);

}  // namespace cgnmt::analysis
