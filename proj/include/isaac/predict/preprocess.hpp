#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isaac/core/matrix.hpp"

namespace isaac::predict {

// Suffix of the companion column that records whether a cell was missing.
inline constexpr std::string_view kMissingSuffix = "__missing";

// Strips kMissingSuffix, mapping a design column back to its dimension.
std::string dimension_of(const std::string& design_column);

// Per-fold imputation and scaling learned from training rows only.
//
// Each input column is imputed with its training mean and standardized with
// the training mean and standard deviation of the imputed column. Columns
// missing in more than `indicator_threshold` of training rows get an extra
// 0/1 indicator column, standardized the same way. Columns that are constant
// after imputation are left out of the design.
class FoldPreprocessor {
 public:
  static FoldPreprocessor fit(const FeatureMatrix& train, double indicator_threshold = 0.05);

  // Design matrix for any rows sharing the training column layout.
  Eigen::MatrixXd transform(const FeatureMatrix& m) const;

  // Imputed but unscaled values, in design-column order.
  Eigen::MatrixXd impute(const FeatureMatrix& m) const;

  const std::vector<std::string>& design_columns() const { return design_columns_; }
  const std::vector<std::string>& input_columns() const { return input_columns_; }
  Eigen::Index design_size() const { return static_cast<Eigen::Index>(design_columns_.size()); }

 private:
  struct Source {
    Eigen::Index input = 0;
    bool indicator = false;
    double center = 0.0;
    double scale = 1.0;
  };

  std::vector<std::string> input_columns_;
  std::vector<double> fill_;
  std::vector<Source> sources_;
  std::vector<std::string> design_columns_;
};

}  // namespace isaac::predict
