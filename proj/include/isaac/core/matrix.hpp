#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isaac/core/schema.hpp"
#include "isaac/core/types.hpp"

namespace isaac {

using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct EncodeOptions {
  bool include_journal = false;
  // Curation-mask exclusions; these columns are never emitted.
  std::set<std::string> excluded;
};

// Wide numeric matrix: one row per rated item, one column per
// modeling-eligible dimension. Missing cells hold 0 in `values` and true in
// `missing`; consumers must consult the mask.
struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> row_titles;
  std::vector<std::string> columns;
  std::vector<DimensionKind> column_kinds;
  Eigen::MatrixXd values;
  MissingMask missing;
  Eigen::VectorXd outcome;
  Eigen::VectorXd weights;
  // Fewer than two distinct non-missing values in the column.
  std::vector<bool> zero_variance;
  // Cells dropped to MISSING because they violated their kind's range.
  std::size_t invalid_cells = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  std::optional<Eigen::Index> column_index(std::string_view id) const;
  std::size_t missing_count() const { return static_cast<std::size_t>(missing.count()); }

  FeatureMatrix select_rows(std::span<const Eigen::Index> indices) const;
  FeatureMatrix without_columns(const std::set<std::string>& ids) const;
  // Appends one row; `values_row` / `missing_row` must have cols() entries.
  FeatureMatrix with_row(std::string id, std::string title, const Eigen::RowVectorXd& values_row,
                         const Eigen::Array<bool, 1, Eigen::Dynamic>& missing_row, double outcome_value,
                         double weight = 1.0) const;

  void refresh_zero_variance();
};

// Every book needs a record (MissingRecord) and a percentile (InvalidArgument);
// books must be non-empty (EmptyCorpus).
FeatureMatrix encode_matrix(std::span<const RatedBook> books, std::span<const AnnotationRecord> records,
                            const AnnotationSchema& schema, const EncodeOptions& opts = {});

// Encodes unrated candidates against a fixed column list; outcome is NaN.
FeatureMatrix encode_rows(std::span<const AnnotationRecord> records, std::span<const std::string> titles,
                          const AnnotationSchema& schema, std::span<const std::string> columns);

std::vector<std::string> modeling_columns(const AnnotationSchema& schema, const EncodeOptions& opts);

struct MatrixCsv {
  std::string data;
  std::string mask;
};

// matrix.csv: header "book_id,<columns...>,outcome,weight"; missing cells
// are empty. The sibling mask file has header "book_id,<columns...>" with 1
// marking a missing cell and 0 a present one.
MatrixCsv write_matrix_csv(const FeatureMatrix& matrix);
FeatureMatrix read_matrix_csv(std::string_view data, std::string_view mask);

}  // namespace isaac
